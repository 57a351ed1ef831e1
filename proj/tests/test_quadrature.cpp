#include "sbf/sbf.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sbf;

namespace {

double integral_of(const PolynomialOnSphere& S) { return S.coeffs(0) * std::sqrt(sphere_volume(S.n)); }

Mat rotation_xyz(double a, double b)
{
    Mat Rz = Mat::Identity(3, 3), Rx = Mat::Identity(3, 3);
    Rz << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    Rx << 1, 0, 0, 0, std::cos(b), -std::sin(b), 0, std::sin(b), std::cos(b);
    return Rx * Rz;
}

} // namespace

TEST(BuildRule, EquispacedCircleIsTrapezoid)
{
    for (int N : {8, 33, 64}) {
        const QuadratureRule r = build_rule(analyze_centers(1, equispaced_circle(N)), N - 1);
        for (int i = 0; i < N; ++i)
            EXPECT_NEAR(r.weights(i), 2 * pi / N, 1e-12);
        EXPECT_LT(r.exactness_residual, 1e-9);
    }
}

TEST(BuildRule, Fibonacci400)
{
    const QuadratureRule r = build_rule(analyze_centers(2, fibonacci_points(400)), 12);
    EXPECT_LT(r.exactness_residual, 1e-9);
    const double ref = 4 * pi / 400;
    EXPECT_GE(r.min_weight(), 0.3 * ref);
    EXPECT_LE(r.max_weight(), 3.0 * ref);
}

TEST(BuildRule, DegreeZeroKeepsTotalMass)
{
    const CenterSet cs = analyze_centers(2, hammersley_points(60));
    const QuadratureRule r = build_rule(cs, 0);
    EXPECT_NEAR(r.weights.sum(), 4 * pi, 1e-12);
    // With one moment the minimizer is a multiple of the cell areas.
    const std::vector<double> mu = voronoi_areas(cs);
    for (int i = 0; i < cs.size(); ++i)
        EXPECT_NEAR(r.weights(i) / mu[i], r.weights(0) / mu[0], 1e-12);
}

TEST(BuildRule, ExactOnRandomPolynomials)
{
    std::mt19937_64 rng(21);
    const QuadratureRule r = build_rule(analyze_centers(2, fibonacci_points(300)), 10);
    for (int d = 0; d < 20; ++d) {
        const PolynomialOnSphere S = random_polynomial(2, 10, rng);
        const double sup = poly_lp_norm(S, inf);
        EXPECT_LE(std::abs(r.apply([&](const Vec& x) { return S(x); }) - integral_of(S)), 1e-8 * sup);
    }
}

TEST(BuildRule, RotationInvariantWeights)
{
    const Mat P = fibonacci_points(200);
    const QuadratureRule a = build_rule(analyze_centers(2, P), 8);
    const QuadratureRule b = build_rule(analyze_centers(2, rotation_xyz(0.7, 1.9) * P), 8);
    EXPECT_LT((a.weights - b.weights).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(BuildRule, RejectsInfeasibleRequests)
{
    const CenterSet cs = analyze_centers(2, fibonacci_points(50));
    EXPECT_THROW(build_rule(cs, 40), std::invalid_argument);
    EXPECT_THROW(build_rule(cs, -1), std::invalid_argument);
    try {
        build_rule(analyze_centers(3, uniform_random_points(3, 30, 1)), 1);
        FAIL() << "expected UnsupportedDimension";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsupportedDimension);
    }
}

TEST(BuildRule, BackoffLandsOnFeasibleDegree)
{
    const CenterSet cs = analyze_centers(2, fibonacci_points(100));
    const QuadratureRule r = build_rule_backoff(cs, 60);
    EXPECT_LE(cs.h * (r.degree_L + lambda_of(2)), default_feasibility_threshold);
    EXPECT_GT(r.min_weight(), 0.0);
    EXPECT_LT(r.exactness_residual, 1e-9);
}

TEST(GridNorm, Constants)
{
    EXPECT_NEAR(lp_norm_on_grid([](const Vec&) { return 1.0; }, 2, 2.0, 0), std::sqrt(4 * pi), 1e-13);
    EXPECT_NEAR(lp_norm_on_grid([](const Vec&) { return 1.0; }, 1, 1.0, 0), 2 * pi, 1e-13);
    EXPECT_NEAR(lp_norm_on_grid([](const Vec&) { return -3.0; }, 2, inf, 0), 3.0, 1e-15);
}

TEST(GridNorm, OrthonormalHarmonic)
{
    for (int m = 1; m <= 3; ++m)
        EXPECT_NEAR(lp_norm_on_grid([&](const Vec& x) { return eval_harmonic(2, 1, m, x); }, 2, 2.0, 1), 1.0, 1e-12);
}

TEST(GridNorm, ParsevalForGeneratingKernel)
{
    const ZonalKernel k = make_generating(2, 0.5, 80);
    double pars = 0.0;
    for (int l = 0; l <= k.lmax(); ++l)
        pars += k.coeffs[l] * k.coeffs[l] * eigenspace_dim(2, l) / sphere_volume(2);
    Vec eta(3);
    eta << 0.0, 0.6, 0.8;
    const double v = lp_norm_on_grid([&](const Vec& x) { return k.closed_form(clamp_dot(x.dot(eta))); }, 2, 2.0, 80);
    EXPECT_NEAR(v * v, pars, 1e-9 * pars);
}

TEST(MZ, DegenerateSetBoundedByMass)
{
    Mat P(3, 2);
    P << 0, 0, 0, 0, 1, -1;
    const CenterSet cs = analyze_centers(2, P);
    const BandKernel K = make_band_kernel(Envelope::bump(), 2, 0.25);
    Vec z(3);
    z << 1, 0, 0;
    EXPECT_LE(mz_discrepancy(K, cs, build_cells(cs, 200).cell_measure, z), K.l1_norm() * (1 + 1e-9));
}

TEST(MZ, DecreasesUnderRefinement)
{
    const BandKernel K = make_band_kernel(Envelope::bump(), 2, 0.25);
    Vec z(3);
    z << 0.3, -0.5, std::sqrt(1 - 0.34);
    double prev = inf;
    for (const CenterSet& cs : refine_nested(analyze_centers(2, octahedron_points()), 3, 2.5)) {
        const double d = mz_discrepancy(K, cs, voronoi_areas(cs), z);
        EXPECT_LE(d, 1.1 * prev);
        prev = d;
    }
}

TEST(MZ, CrossoverIsContinuous)
{
    const CenterSet cs = analyze_centers(2, fibonacci_points(200));
    const CellDecomposition cells = build_cells(cs, 400);
    Vec z(3);
    z << 0, 0, 1;
    const double a = mz_discrepancy(make_band_kernel(Envelope::bump(), 2, 0.9 * cells.partition_norm), cs, cells.cell_measure, z);
    const double b = mz_discrepancy(make_band_kernel(Envelope::bump(), 2, 1.1 * cells.partition_norm), cs, cells.cell_measure, z);
    EXPECT_LT(std::max(a, b) / std::min(a, b), 2.0);
}

TEST(MZ, PolynomialInequality)
{
    std::mt19937_64 rng(23);
    const CenterSet cs = analyze_centers(2, fibonacci_points(800));
    const std::vector<double> mu = voronoi_areas(cs);
    const int L = 6;
    for (int d = 0; d < 10; ++d) {
        const PolynomialOnSphere S = random_polynomial(2, L, rng);
        double s = 0.0;
        for (int i = 0; i < cs.size(); ++i)
            s += mu[i] * std::abs(S(cs.points.col(i)));
        EXPECT_LE(s, 1.25 * poly_lp_norm(S, 1.0));
    }
}

TEST(OffDiagonal, EquispacedCircleScalesLikeInverseSeparation)
{
    std::vector<double> v;
    for (int N : {32, 64, 128}) {
        const CenterSet cs = analyze_centers(1, equispaced_circle(N));
        v.push_back(offdiag_kernel_sum(make_band_kernel(Envelope::bump(), 1, cs.q), cs) * cs.q);
    }
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    EXPECT_LT(*mx / *mn, 2.0);
}

TEST(OffDiagonal, EmptyBandIsZero)
{
    // Support above degree cap: every stored coefficient vanishes.
    const BandKernel K = make_band_kernel(Envelope::bump(1.0, 2.0), 2, 1.0 / 64, 32);
    EXPECT_EQ(offdiag_kernel_sum(K, analyze_centers(2, fibonacci_points(40))), 0.0);
}

TEST(OffDiagonal, DiagonalDominanceImproves)
{
    const CenterSet cs = analyze_centers(2, fibonacci_points(300));
    double prev = 0.0;
    for (double f : {1.0, 0.5, 0.25}) {
        const BandKernel K = make_band_kernel(Envelope::gaussian(), 2, f * cs.q);
        const double margin = K(1.0) / offdiag_kernel_sum(K, cs);
        EXPECT_GT(margin, prev) << f;
        prev = margin;
    }
}
