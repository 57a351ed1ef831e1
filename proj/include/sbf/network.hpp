#pragma once

#include "sbf/error.hpp"
#include "sbf/frames.hpp"
#include "sbf/geometry.hpp"
#include "sbf/harmonics.hpp"
#include "sbf/kernels.hpp"
#include "sbf/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <random>
#include <vector>

namespace sbf {

struct SbfNetwork {
    std::shared_ptr<const ZonalKernel> kernel;
    std::shared_ptr<const CenterSet> centers;
    Vec a;
};

inline SbfNetwork make_network(const ZonalKernel& k, const CenterSet& cs, const Vec& a)
{
    require(a.size() == cs.size(), "network: coefficient count must match centers");
    require(k.n == cs.n, "network: kernel and centers live on different spheres");
    return SbfNetwork{std::make_shared<const ZonalKernel>(k), std::make_shared<const CenterSet>(cs), a};
}

inline double evaluate(const SbfNetwork& net, const Vec& x)
{
    double s = 0.0;
    for (int i = 0; i < net.centers->size(); ++i)
        if (net.a(i) != 0.0)
            s += net.a(i) * net.kernel->eval(sphere_dot(net.centers->points.col(i), x));
    return s;
}

// Drops trailing coefficients whose sup-norm contribution is below rel times the total.
inline std::vector<double> trim_coeffs(const std::vector<double>& c, int n, double rel = 1e-17)
{
    const double om = sphere_volume(n);
    double total = 0.0;
    for (size_t l = 0; l < c.size(); ++l)
        total += std::abs(c[l]) * static_cast<double>(eigenspace_dim(n, static_cast<int>(l))) / om;
    double tail = 0.0;
    size_t keep = c.size();
    while (keep > 1) {
        const double t = std::abs(c[keep - 1]) * static_cast<double>(eigenspace_dim(n, static_cast<int>(keep - 1))) / om;
        if (tail + t > rel * total)
            break;
        tail += t;
        --keep;
    }
    return std::vector<double>(c.begin(), c.begin() + keep);
}

// Symmetric matrix [F(xi_i . xi_j)] for F = sum_l c_l P_l.
inline Mat zonal_gram(int n, const std::vector<double>& c, const Mat& P)
{
    const ZonalSeries F(n, trim_coeffs(c, n));
    const int N = static_cast<int>(P.cols());
    Mat G(N, N);
    const double diag = F(1.0);
    for (int i = 0; i < N; ++i) {
        G(i, i) = diag;
        for (int j = i + 1; j < N; ++j)
            G(i, j) = G(j, i) = F(sphere_dot(P.col(i), P.col(j)));
    }
    return G;
}

inline Mat kernel_matrix(const ZonalKernel& k, const Mat& P)
{
    const int N = static_cast<int>(P.cols());
    Mat A(N, N);
    const double diag = k.eval(1.0);
    for (int i = 0; i < N; ++i) {
        A(i, i) = diag;
        for (int j = i + 1; j < N; ++j)
            A(i, j) = A(j, i) = k.eval(sphere_dot(P.col(i), P.col(j)));
    }
    return A;
}

inline std::vector<double> squared_coeffs(const ZonalKernel& k, double gamma = 0.0)
{
    std::vector<double> c(k.coeffs.size());
    for (int l = 0; l <= k.lmax(); ++l)
        c[l] = std::exp(2.0 * k.log_coeffs[l] + 2.0 * gamma * std::log(k.nu(l)));
    return c;
}

// L^2 Gram of the translates: entries sum_l (l+lambda)^{2 gamma} phi_hat(l)^2 P_l(xi . eta).
inline Mat l2_gram(const ZonalKernel& k, const CenterSet& cs, double gamma = 0.0)
{
    return zonal_gram(k.n, squared_coeffs(k, gamma), cs.points);
}

inline double symmetric_lambda_min(const Mat& A)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline SbfNetwork interpolate(const ZonalKernel& k, const CenterSet& cs, const Vec& y)
{
    require(y.size() == cs.size(), "interpolate: value count must match centers");
    require(k.has_closed_form() || std::isfinite(k.tail_bound(0)), "interpolate: kernel must be continuous");
    const Mat A = kernel_matrix(k, cs.points);
    Eigen::LLT<Mat> llt(A);
    Vec a;
    if (llt.info() == Eigen::Success)
        a = llt.solve(y);
    else
        a = A.ldlt().solve(y);
    const double ymax = std::max(y.cwiseAbs().maxCoeff(), 1e-300);
    if (llt.info() != Eigen::Success || !((A * a - y).cwiseAbs().maxCoeff() <= 1e-8 * ymax)) {
        const double lmin = symmetric_lambda_min(A);
        fail(ErrorCode::SingularSystem, "interpolation matrix lambda_min = " + std::to_string(lmin));
    }
    return make_network(k, cs, a);
}

struct InterpolationSystem {
    Mat A;
    double epsilon = 0.0;
    double lambda_min = 0.0;
    double norm1_inv = 0.0;
    double norm2_inv = 0.0;
    double dominance = 0.0;   // ||D^{-1} F||_1
    double lemma_bound = inf; // ||D^{-1}||_1 / (1 - ||D^{-1}F||_1) when dominance < 1
};

inline std::vector<double> smoothed_coeffs(const ZonalKernel& k, const Envelope& kappa, double eps)
{
    std::vector<double> c(k.coeffs.size());
    for (int l = 0; l <= k.lmax(); ++l)
        c[l] = kappa(eps * k.nu(l)) * k.coeffs[l];
    return c;
}

inline double max_col_abs_sum(const Mat& M) { return M.cwiseAbs().colwise().sum().maxCoeff(); }

// ||D^{-1} F||_1 for the split A = D + F into diagonal and off-diagonal parts.
inline double diagonal_dominance(const Mat& A)
{
    double m = 0.0;
    for (int j = 0; j < A.cols(); ++j) {
        double s = 0.0;
        for (int i = 0; i < A.rows(); ++i)
            if (i != j)
                s += std::abs(A(i, j) / A(i, i));
        m = std::max(m, s);
    }
    return m;
}

inline InterpolationSystem smoothed_matrix(const ZonalKernel& k, const CenterSet& cs, const Envelope& kappa,
                                           double eps)
{
    require(eps > 0.0 && eps <= 1.0, "smoothed_matrix: eps must lie in (0,1]");
    InterpolationSystem sys;
    sys.epsilon = eps;
    sys.A = zonal_gram(k.n, smoothed_coeffs(k, kappa, eps), cs.points);
    sys.lambda_min = symmetric_lambda_min(sys.A);
    const int N = cs.size();
    const Mat inv = sys.A.ldlt().solve(Mat::Identity(N, N));
    sys.norm1_inv = max_col_abs_sum(inv);
    sys.norm2_inv = sys.lambda_min > 0 ? 1.0 / sys.lambda_min : inf;
    sys.dominance = diagonal_dominance(sys.A);
    if (sys.dominance < 1.0) {
        double dinv = 0.0;
        for (int i = 0; i < N; ++i)
            dinv = std::max(dinv, 1.0 / std::abs(sys.A(i, i)));
        sys.lemma_bound = dinv / (1.0 - sys.dominance);
    }
    return sys;
}

struct Calibration {
    double c = 1.0;
    double dominance = inf;
    bool admissible = false; // dominance <= 1/2 reached
};

// Largest c on the ladder 2^{j/2}, j = 6..-16, with ||D^{-1}F||_1 <= 1/2 at
// eps = c q. Without such c, the rung of least dominance is returned unflagged.
inline Calibration calibrate_c(const ZonalKernel& k, const CenterSet& reference, const Envelope& kappa)
{
    Calibration best;
    for (int j = 6; j >= -16; --j) {
        const double c = std::pow(2.0, 0.5 * j);
        const double eps = std::min(1.0, c * reference.q);
        const std::vector<double> sc = smoothed_coeffs(k, kappa, eps);
        bool any = false;
        for (double v : sc)
            any = any || v > 0.0;
        if (!any)
            continue;
        const double d = diagonal_dominance(zonal_gram(k.n, sc, reference.points));
        if (d <= 0.5)
            return Calibration{c, d, true};
        if (d < best.dominance)
            best = Calibration{c, d, false};
    }
    return best;
}

inline bool algebraic_type(const ZonalKernel& k)
{
    return k.family == Family::Green || k.family == Family::TPS || k.family == Family::Wendland ||
           k.tail_model == TailModel::Algebraic;
}

// |a|^2 for kernels of algebraic decay, b for the C-infinity families.
inline Envelope default_smoothing(const ZonalKernel& k)
{
    return algebraic_type(k) ? Envelope::mask_squared() : Envelope::b_function();
}

// Effective band: smallest L whose tail is below rel times phi(1).
inline int effective_band(const ZonalKernel& k, double rel = 1e-16)
{
    const double total = k.tail_bound(-1);
    if (std::isinf(total))
        return k.lmax();
    for (int L = 0; L <= k.lmax(); ++L)
        if (k.tail_bound(L) <= rel * total)
            return L;
    return k.lmax();
}

// Values of a network on the points of a grid.
inline std::vector<double> network_values(const SbfNetwork& net, const Mat& X)
{
    std::vector<double> v(X.cols(), 0.0);
    for (long g = 0; g < X.cols(); ++g)
        v[g] = evaluate(net, X.col(g));
    return v;
}

// ||g||_p. For p = 2 with a wide band the exact spectral form a^T G a is used;
// otherwise a product grid.
inline double network_norm(const SbfNetwork& net, double p)
{
    const ZonalKernel& k = *net.kernel;
    const int band = effective_band(k);
    if (p == 2.0 && (band > 128 || !k.has_closed_form())) {
        const Mat G = l2_gram(k, *net.centers);
        return std::sqrt(std::max(0.0, net.a.dot(G * net.a)));
    }
    const int D = p == 2.0 ? 2 * band : std::min(4 * band + 16, 256);
    const SphereGrid g = exact_grid(k.n, D);
    double val = lp_norm_values(network_values(net, g.points), g.weights, p);
    if (std::isinf(p)) {
        const SphereGrid g2 = exact_grid(k.n, 2 * D + 1);
        val = std::max(val, lp_norm_values(network_values(net, g2.points), g2.weights, p));
    }
    return val;
}

// ||g||_{H^p_gamma}: p = 2 spectrally, other p on a grid with L^gamma phi.
inline double sobolev_norm(const SbfNetwork& net, double gamma, double p)
{
    const ZonalKernel& k = *net.kernel;
    const double pprime = p == 1.0 ? inf : (std::isinf(p) ? 1.0 : p / (p - 1.0));
    const double np = std::isinf(pprime) ? 0.0 : k.n / pprime;
    if (k.tail_model == TailModel::Algebraic && k.decay_exponent - gamma - np <= 0.0)
        fail(ErrorCode::DivergentSeries, "L^gamma phi is not in L^p");
    if (gamma == 0.0)
        return network_norm(net, p);
    if (p == 2.0) {
        const Mat G = l2_gram(k, *net.centers, gamma);
        return std::sqrt(std::max(0.0, net.a.dot(G * net.a)));
    }
    const ZonalKernel t = lp_kernel_transform(k, gamma);
    SbfNetwork tn{std::make_shared<const ZonalKernel>(t), net.centers, net.a};
    return network_norm(tn, p);
}

struct StabilityReport {
    double p = 2.0;
    double lower_bound = 0.0;
    double upper_bound = inf;
    Vec witness_coeffs;
    double lambda_min_gram = 0.0;
    double epsilon = 0.0;
    double c = 0.0;
    bool c_admissible = false;
    std::string envelope;
    double norm1_inv_smoothed = 0.0;
    double sampling_norm = 0.0;
    double theorem_scaling = 0.0; // rate expression of the matching theorem, constant omitted
    bool budget_exhausted = false;
    int evaluations = 0;
};

struct StabilityOptions {
    int search_budget = 2000;
    double c = 0.0; // 0: calibrate on the given set
    std::optional<Envelope> kappa; // default_smoothing(k) when empty
    int grid_degree = 0; // for p != 2; 0 picks from the kernel band
};

inline StabilityReport stability_ratio(const ZonalKernel& k, const CenterSet& cs, double p,
                                       const StabilityOptions& opt = {})
{
    StabilityReport rep;
    const Envelope kappa = opt.kappa ? *opt.kappa : default_smoothing(k);
    rep.envelope = kappa.name();
    rep.p = p;
    const int N = cs.size();
    const Mat G = l2_gram(k, cs);
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    rep.lambda_min_gram = es.eigenvalues()(0);
    Vec a = es.eigenvectors().col(0);
    const SbfNetwork seed = make_network(k, cs, a);

    auto ratio_p = [&](const Vec& v, double norm) {
        const double num = std::isinf(p) ? v.cwiseAbs().maxCoeff() : std::pow(v.cwiseAbs().array().pow(p).sum(), 1.0 / p);
        return num / norm;
    };
    if (p == 2.0) {
        rep.lower_bound = ratio_p(a, network_norm(seed, 2.0));
        rep.witness_coeffs = a;
        rep.evaluations = 1;
    } else {
        // Coordinate ascent on |a|_p / ||Phi a||_p over a fixed grid.
        const int band = effective_band(k);
        const int D = opt.grid_degree > 0 ? opt.grid_degree : std::min(4 * band + 16, 96);
        const SphereGrid g = exact_grid(k.n, D);
        Mat Phi(g.size(), N);
        for (long r = 0; r < g.size(); ++r)
            for (int j = 0; j < N; ++j)
                Phi(r, j) = k.eval(sphere_dot(g.points.col(r), cs.points.col(j)));
        auto gnorm = [&](const Vec& gv) {
            std::vector<double> v(gv.data(), gv.data() + gv.size());
            return lp_norm_values(v, g.weights, p);
        };
        Vec gv = Phi * a;
        double best = ratio_p(a, gnorm(gv));
        int evals = 1;
        double step = 0.25 * a.cwiseAbs().maxCoeff();
        while (step > 1e-6 * a.cwiseAbs().maxCoeff()) {
            bool improved = false;
            for (int i = 0; i < N && evals < opt.search_budget; ++i) {
                for (double sgn : {1.0, -1.0}) {
                    Vec a2 = a;
                    a2(i) += sgn * step;
                    const Vec g2 = gv + sgn * step * Phi.col(i);
                    const double r = ratio_p(a2, gnorm(g2));
                    ++evals;
                    if (r > best) {
                        best = r;
                        a = a2;
                        gv = g2;
                        improved = true;
                        break;
                    }
                }
            }
            if (evals >= opt.search_budget) {
                rep.budget_exhausted = true;
                break;
            }
            if (!improved)
                step *= 0.5;
        }
        rep.lower_bound = best;
        rep.witness_coeffs = a;
        rep.evaluations = evals;
    }

    // Upper bound: ||A_eps^{-1}||_1 times the norm of g -> (K_eps * g)|_X.
    if (opt.c > 0) {
        rep.c = opt.c;
        rep.c_admissible = true;
    } else {
        const Calibration cal = calibrate_c(k, cs, kappa);
        rep.c = cal.c;
        rep.c_admissible = cal.admissible;
    }
    rep.epsilon = std::min(1.0, rep.c * cs.q);
    const InterpolationSystem sys = smoothed_matrix(k, cs, kappa, rep.epsilon);
    rep.norm1_inv_smoothed = sys.norm1_inv;
    std::vector<double> kc(k.coeffs.size());
    for (int l = 0; l <= k.lmax(); ++l)
        kc[l] = kappa(rep.epsilon * k.nu(l));
    if (p == 2.0) {
        std::vector<double> kc2(kc.size());
        for (size_t l = 0; l < kc.size(); ++l)
            kc2[l] = kc[l] * kc[l];
        const Mat K2 = zonal_gram(k.n, kc2, cs.points);
        rep.sampling_norm = std::sqrt(Eigen::SelfAdjointEigenSolver<Mat>(K2, Eigen::EigenvaluesOnly).eigenvalues()(N - 1));
    } else {
        const ZonalSeries K(k.n, trim_coeffs(kc, k.n));
        const double Minf = zonal_lp_norm(kc, k.n, 1.0);
        const int D = std::max(64, static_cast<int>(std::ceil(8.0 / rep.epsilon)));
        const SphereGrid g = exact_grid(k.n, std::min(D, 512));
        double M1 = 0.0;
        auto row = [&](const double* x) {
            double s = 0.0;
            for (int j = 0; j < N; ++j) {
                double d = 0.0;
                for (int r = 0; r <= k.n; ++r)
                    d += x[r] * cs.points(r, j);
                s += std::abs(K(clamp_dot(d)));
            }
            return s;
        };
        for (long r = 0; r < g.size(); ++r)
            M1 = std::max(M1, row(g.points.col(r).data()));
        for (int j = 0; j < N; ++j)
            M1 = std::max(M1, row(cs.points.col(j).data()));
        const double ip = std::isinf(p) ? 0.0 : 1.0 / p;
        rep.sampling_norm = std::pow(M1, ip) * std::pow(Minf, 1.0 - ip);
    }
    rep.upper_bound = rep.norm1_inv_smoothed * rep.sampling_norm;
    if (!(sys.lambda_min > 0.0) || !std::isfinite(rep.upper_bound))
        rep.upper_bound = inf; // A_eps numerically singular: no certificate

    const double ip = std::isinf(p) ? 0.0 : 1.0 / p;
    const double n = k.n;
    if (k.family == Family::Green) {
        rep.theorem_scaling = std::pow(cs.rho, n * ip) * std::pow(cs.q, n * (1.0 - ip) - k.param("beta"));
    } else {
        const int Lc = std::min(k.lmax(), static_cast<int>(std::ceil(2.0 / (rep.c * cs.q))));
        rep.theorem_scaling = std::pow(cs.rho, n * ip) * std::pow(cs.q, n * (0.5 - ip)) /
                              std::exp(log_min_coeff(k, Lc));
    }
    return rep;
}

inline PolynomialOnSphere inv_convolve_poly(const ZonalKernel& k, const PolynomialOnSphere& S)
{
    require(k.n == S.n, "inv_convolve_poly: dimension mismatch");
    if (S.degree > k.lmax())
        fail(ErrorCode::ZeroCoefficient, "polynomial degree beyond the stored coefficients");
    PolynomialOnSphere r = S;
    for (long i = 0; i < r.coeffs.size(); ++i) {
        const int l = harmonic_degree(S.n, i);
        if (!(k.coeffs[l] > 0.0))
            fail(ErrorCode::ZeroCoefficient, "phi_hat(" + std::to_string(l) + ") is not positive");
        r.coeffs(i) /= k.coeffs[l];
    }
    return r;
}

// phi * S in the harmonic basis.
inline PolynomialOnSphere convolve_poly(const ZonalKernel& k, const PolynomialOnSphere& S)
{
    PolynomialOnSphere r = S;
    for (long i = 0; i < r.coeffs.size(); ++i)
        r.coeffs(i) *= k.coeffs[harmonic_degree(S.n, i)];
    return r;
}

// Smallest J >= 0 for which B_J reproduces every degree <= L.
inline int reproducing_J(int n, int L)
{
    int J = 0;
    while (std::ldexp(1.0, J + frame_jn(n)) < L + lambda_of(n))
        ++J;
    return J;
}

// Rule exactness needed so that sum c_xi (B_J phi)(x.xi) u(xi) integrates exactly.
inline int quasi_interp_required_degree(int n, int degS)
{
    const FrameOperatorSpec spec = make_frame_spec(n, reproducing_J(n, degS));
    return degS + spec.degree_bound() - 1;
}

inline SbfNetwork quasi_interpolate(const ZonalKernel& k, const QuadratureRule& rule, const PolynomialOnSphere& S)
{
    const int need = quasi_interp_required_degree(S.n, S.degree);
    if (rule.degree_L < need)
        fail(ErrorCode::DegreeOverflow, "rule exact to degree " + std::to_string(rule.degree_L) + ", need " +
                                            std::to_string(need));
    const PolynomialOnSphere u = inv_convolve_poly(k, S);
    const CenterSet& cs = *rule.centers;
    Vec a(cs.size());
    for (int i = 0; i < cs.size(); ++i)
        a(i) = rule.weights(i) * u(cs.points.col(i));
    return SbfNetwork{std::make_shared<const ZonalKernel>(k), rule.centers, a};
}

inline Vec random_coefficients(int N, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vec a(N);
    for (int i = 0; i < N; ++i)
        a(i) = U(rng);
    return a;
}

} // namespace sbf
