#include "oracle.hpp"
#include "sbf/sbf.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

using namespace sbf;
using oracle::mp;

namespace {

double true_coeff(const ZonalKernel& k, int l)
{
    return l < static_cast<int>(k.raw_low.size()) ? k.raw_low[l] : k.coeffs[l];
}

std::vector<ZonalKernel> presets()
{
    return {make_green(2, 3.0),       make_tps(2, 0.5),          make_tps(2, 1.0),
            make_tps(2, 1.5),         make_wendland(2, 6, 1, 0.0), make_gaussian(2, 1.0),
            make_gaussian(1, 0.5),    make_multiquadric(2, 1.0), make_generating(2, 0.5),
            make_generating(1, 0.5), make_green(1, 2.0)};
}

} // namespace

TEST(Green, CoefficientRule)
{
    const ZonalKernel k = make_green(2, 3.0);
    EXPECT_NEAR(k.coeffs[0], 8.0, 1e-13);
    EXPECT_NEAR(k.coeffs[1], 8.0 / 27.0, 1e-15);
    std::vector<double> zero(50, 0.0);
    const ZonalKernel z = make_green(2, 3.0, zero);
    for (int l = 0; l <= k.lmax(); ++l)
        EXPECT_EQ(z.coeffs[l], k.coeffs[l]);
}

TEST(Green, PerturbationMustStayPositive)
{
    EXPECT_THROW(make_green(2, 3.0, {0.0, -1.0}), Error);
    const ZonalKernel k = make_green(2, 2.0, {0.5});
    EXPECT_NEAR(k.coeffs[0], 1.5 * 4.0, 1e-13);
}

TEST(TPS, QuadratureOracle)
{
    const ZonalKernel k = make_tps(2, 0.5);
    for (int l : {1, 2, 3}) {
        const double want = oracle::coefficient_s2([](const mp& u) { return mp(-sqrt(u)); }, l);
        EXPECT_NEAR(k.coeffs[l], want, 1e-8 * std::abs(want));
    }
}

TEST(TPS, Asymptotics)
{
    for (double s : {0.5, 1.0, 1.5}) {
        const ZonalKernel k = make_tps(2, s);
        const int l = 512;
        const double ratio = k.coeffs[l] * std::pow(k.nu(l), 2 * s + 2) / tps_constant(2, s);
        EXPECT_NEAR(ratio, 1.0, 5e-3) << "s=" << s;
    }
}

TEST(TPS, SingularKernelIsPositive)
{
    const ZonalKernel k = make_tps(2, -0.5);
    for (int l = 0; l <= k.lmax(); ++l)
        EXPECT_GT(k.coeffs[l], 0.0);
    EXPECT_EQ(k.poly_part, 0);
}

TEST(TPS, LinearCombinationLeadingTerm)
{
    // 2 phi_{1/2} + 5 phi_{3/2}: the s = 1/2 term dominates the tail.
    const ZonalKernel a = make_tps(2, 0.5), b = make_tps(2, 1.5);
    for (int l : {256, 1024}) {
        const double comb = 2 * a.coeffs[l] + 5 * b.coeffs[l];
        const double lead = 2 * tps_constant(2, 0.5) * std::pow(a.nu(l), -3.0);
        EXPECT_NEAR(comb / lead, 1.0, l == 256 ? 2e-2 : 5e-3);
    }
}

TEST(Wendland, PositiveAndDecayExponent)
{
    const ZonalKernel w = make_wendland(2, 6, 1, 0.0);
    for (int l = 0; l <= 200; ++l)
        EXPECT_GT(w.coeffs[l], 0.0);
    std::vector<double> x, y;
    for (int l = 64; l <= 512; ++l) {
        x.push_back(std::log(w.nu(l)));
        y.push_back(std::log(w.coeffs[l]));
    }
    EXPECT_NEAR(fit_line(x, y).slope, -5.0, 0.15);
}

TEST(Wendland, CompactSupport)
{
    const ZonalKernel w = make_wendland(2, 6, 1, 0.2);
    EXPECT_EQ(w.closed_form(0.2), 0.0);
    EXPECT_EQ(w.closed_form(-0.7), 0.0);
    EXPECT_GT(w.closed_form(0.9), 0.0);
}

TEST(Wendland, QuadratureOracle)
{
    const ZonalKernel w = make_wendland(2, 6, 1, 0.0);
    // Closed form evaluated in double; the oracle integrates it in extended precision.
    for (int l = 0; l <= 20; l += 4) {
        const double want = oracle::coefficient_s2(
            [&](const mp& u) { return mp(w.closed_form(static_cast<double>(1 - u))); }, l);
        EXPECT_NEAR(w.coeffs[l], want, 1e-7 * std::abs(want));
    }
}

TEST(Gaussian, MatchesBesselOracle)
{
    for (int n : {1, 2, 3})
        for (double sigma : {0.5, 1.0, 2.0}) {
            const ZonalKernel g = make_gaussian(n, sigma);
            const double lam = lambda_of(n);
            for (int l = 0; l <= 60; l += 5) {
                const double want = 2 * pi * std::pow(pi / sigma, lam) * std::exp(-2 * sigma) *
                                    boost::math::cyl_bessel_i(l + lam, 2 * sigma);
                EXPECT_NEAR(g.coeffs[l], want, 1e-12 * want);
            }
        }
}

TEST(Gaussian, FrozenValues)
{
    const ZonalKernel g = make_gaussian(2, 1.0);
    EXPECT_NEAR(g.coeffs[0], 3.084052377011143, 1e-14);
    EXPECT_NEAR(g.coeffs[1], 1.6571067416628726, 1e-14);
    EXPECT_NEAR(g.coeffs[5], 0.006096655884984062, 1e-16);
}

TEST(Gaussian, TwoSidedBound)
{
    for (double sigma : {0.5, 1.0, 2.0}) {
        const ZonalKernel g = make_gaussian(2, sigma);
        for (int l = 0; l <= 50; ++l) {
            const double up = std::log(2.0) + l * std::log(sigma) + 1.5 * std::log(pi) - std::lgamma(l + 1.5);
            EXPECT_LE(g.log_coeffs[l], up);
            EXPECT_GE(g.log_coeffs[l], up - 2 * sigma);
        }
    }
}

TEST(Gaussian, SeriesReconstruction)
{
    const ZonalKernel g = make_gaussian(2, 1.0, 64);
    for (double t : {-1.0, 0.0, 1.0})
        EXPECT_NEAR(g.eval_series(t), std::exp(-2 * (1 - t)), 1e-9);
}

TEST(Gaussian, SmallSigmaIsConstant)
{
    const ZonalKernel g = make_gaussian(2, 1e-8);
    EXPECT_NEAR(g.coeffs[0], 4 * pi, 1e-6);
    EXPECT_NEAR(g.eval_series(-0.3), 1.0, 1e-6);
}

TEST(Multiquadric, QuadratureOracle)
{
    const ZonalKernel k = make_multiquadric(2, 1.0);
    for (int l : {1, 2, 3}) {
        const double want = oracle::coefficient_s2([](const mp& u) { return mp(-sqrt(1 + 2 * u)); }, l);
        EXPECT_NEAR(k.coeffs[l], want, 1e-8 * std::abs(want));
    }
}

TEST(Multiquadric, DecaySandwichConstantsAreStable)
{
    const double delta = 1.0, D = delta * delta + 2;
    const ZonalKernel k = make_multiquadric(2, delta);
    double c1lo = inf, c1hi = 0, c2lo = inf, c2hi = 0;
    for (int l = 16; l <= 64; ++l) {
        const double lower = std::pow(l, -2.0) * std::pow(1 / D, l - 0.5);
        const double upper = std::pow(l, -3.0) * std::pow(2 / D, l - 0.5);
        c1lo = std::min(c1lo, k.coeffs[l] / lower);
        c1hi = std::max(c1hi, k.coeffs[l] / lower);
        c2lo = std::min(c2lo, k.coeffs[l] / upper);
        c2hi = std::max(c2hi, k.coeffs[l] / upper);
    }
    // phi_hat / lower grows with l (ratio bounded below), phi_hat / upper shrinks.
    EXPECT_GT(c1lo, 0.0);
    EXPECT_LT(c2hi, inf);
    EXPECT_LT(c2lo, c2hi);
    EXPECT_GT(c1hi, c1lo);
}

TEST(Multiquadric, RatioForLargeDelta)
{
    double prev = inf;
    for (double delta : {10.0, 30.0, 100.0}) {
        const ZonalKernel k = make_multiquadric(2, delta);
        // The hypergeometric factor tends to one; the gamma quotient stays.
        const double gamma_part = (10 + lambda_of(2) + 1) / (10 - 0.5);
        const double gap = std::abs(k.coeffs[10] / k.coeffs[11] / ((delta * delta + 2) * gamma_part) - 1.0);
        EXPECT_LT(gap, prev);
        prev = gap;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(Generating, GeometricCoefficients)
{
    EXPECT_NEAR(make_generating(2, 0.5).coeffs[3], 0.125, 1e-15);
    const ZonalKernel p = make_generating(1, 0.5);
    EXPECT_NEAR(p.coeffs[0], 1.0, 1e-15);
    EXPECT_NEAR(p.coeffs[2], 0.5, 1e-15);
    const ZonalKernel g = make_generating(2, 0.5, 60);
    EXPECT_NEAR(g.eval_series(0.3), g.closed_form(0.3), 1e-12);
}

TEST(Catalog, CoefficientsPositive)
{
    for (const ZonalKernel& k : presets())
        for (int l = 0; l <= std::min(200, k.lmax()); ++l) {
            // Below the double range the value lives in log_coeffs.
            EXPECT_TRUE(k.coeffs[l] > 0.0 || (k.coeffs[l] == 0.0 && std::isfinite(k.log_coeffs[l])))
                << family_name(k.family) << " l=" << l;
        }
}

TEST(Catalog, ClosedFormAgreesWithSeriesWithinTailBound)
{
    for (const ZonalKernel& k : presets()) {
        const double tb = k.tail_bound(k.lmax());
        if (!k.has_closed_form() || !std::isfinite(tb))
            continue;
        for (int i = 0; i < 32; ++i) {
            const double t = -1.0 + 2.0 * i / 31.0;
            const double tol = tb + 1e-10 * std::max(1.0, std::abs(k.eval(t)));
            EXPECT_NEAR(k.eval(t), k.eval_series(t), tol) << family_name(k.family) << " t=" << t;
        }
    }
}

TEST(Catalog, CoefficientSymmetryAgainstOracle)
{
    struct Case {
        ZonalKernel k;
        std::function<mp(const mp&)> phi;
    };
    std::vector<Case> cases = {
        {make_tps(2, 0.5), [](const mp& u) { return mp(-sqrt(u)); }},
        {make_tps(2, 1.0), [](const mp& u) { return mp(u * log(u)); }},
        {make_gaussian(2, 1.0), [](const mp& u) { return mp(exp(-2 * u)); }},
        {make_multiquadric(2, 1.0), [](const mp& u) { return mp(-sqrt(1 + 2 * u)); }},
    };
    for (const Case& c : cases)
        for (int l = 0; l <= 20; ++l) {
            const double want = oracle::coefficient_s2(c.phi, l);
            EXPECT_NEAR(true_coeff(c.k, l), want, 1e-7 * std::abs(want)) << family_name(c.k.family) << " l=" << l;
        }
}

TEST(MinCoeffProfile, MonotoneAndScanned)
{
    const ZonalKernel g = make_green(2, 3.0);
    for (int L : {0, 5, 40})
        EXPECT_NEAR(min_coeff_profile(g, 0.0, L), std::pow(L + 0.5, -3.0), 1e-14 * std::pow(L + 0.5, -3.0));
    const ZonalKernel ga = make_gaussian(2, 1.0);
    EXPECT_DOUBLE_EQ(min_coeff_profile(ga, 0.0, 10), ga.coeffs[10]);
    EXPECT_DOUBLE_EQ(min_coeff_profile(ga, 0.0, 10), std::exp(log_min_coeff(ga, 10)));
}

TEST(LpTransform, IdentityRoundTripAndGreenShift)
{
    const ZonalKernel g = make_green(2, 3.0);
    const ZonalKernel same = lp_kernel_transform(g, 0.0);
    for (int l = 0; l <= g.lmax(); ++l)
        EXPECT_EQ(same.coeffs[l], g.coeffs[l]);
    const ZonalKernel g1 = lp_kernel_transform(g, 1.0), g2 = make_green(2, 2.0);
    for (int l = 0; l <= g.lmax(); l += 50)
        EXPECT_NEAR(g1.coeffs[l], g2.coeffs[l], 1e-14 * g2.coeffs[l]);
    const ZonalKernel back = lp_kernel_transform(g1, -1.0);
    for (int l = 0; l <= g.lmax(); ++l)
        EXPECT_NEAR(back.coeffs[l], g.coeffs[l], 1e-14 * g.coeffs[l]);
}

TEST(BestPolyError, GeometricTail)
{
    const ZonalKernel g = make_generating(2, 0.5);
    double want = 0.0;
    for (int l = 11; l <= 400; ++l)
        want += std::pow(0.5, l) * (2 * l + 1) / (4 * pi);
    EXPECT_NEAR(best_poly_error(g, 10, inf), want, 1e-12 * want);
    double prev = inf;
    for (int L = 0; L <= 40; L += 5) {
        const double e = best_poly_error(g, L, inf);
        EXPECT_LE(e, prev);
        prev = e;
    }
    const ZonalKernel c = make_custom(2, {1.0, 0.5, 0.25});
    EXPECT_EQ(best_poly_error(c, 5, inf), 0.0);
}

TEST(Kernels, InvalidParameters)
{
    EXPECT_THROW(make_green(2, -1.0), std::invalid_argument);
    EXPECT_THROW(make_tps(2, -1.0), std::invalid_argument);
    EXPECT_THROW(make_generating(2, 1.0), std::invalid_argument);
    EXPECT_THROW(make_gaussian(2, 0.0), std::invalid_argument);
}
