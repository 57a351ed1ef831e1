#pragma once

#include "sbf/error.hpp"
#include "sbf/frames.hpp"
#include "sbf/geometry.hpp"
#include "sbf/harmonics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

namespace sbf {

// Default stand-in for the feasibility constant: largest h(L+lambda) accepted.
// pi admits every equispaced circle rule up to degree N-1.
inline constexpr double default_feasibility_threshold = 3.1415926535897932;

struct QuadratureRule {
    std::shared_ptr<const CenterSet> centers;
    int degree_L = 0;
    Vec weights;
    double exactness_residual = 0.0;
    double threshold = default_feasibility_threshold;
    double feasibility = 0.0; // h (L + lambda)

    double min_weight() const { return weights.minCoeff(); }
    double max_weight() const { return weights.maxCoeff(); }

    double apply(const std::function<double(const Vec&)>& f) const
    {
        double s = 0.0;
        for (int i = 0; i < centers->size(); ++i)
            s += weights(i) * f(centers->points.col(i));
        return s;
    }
};

struct RuleOptions {
    double threshold = default_feasibility_threshold;
};

// Rows: orthonormal harmonics of degree <= L; columns: centers.
inline Mat harmonic_matrix(int n, int L, const Mat& P)
{
    const long M = harmonic_count(n, L);
    Mat Y(M, P.cols());
    for (int j = 0; j < P.cols(); ++j)
        eval_harmonics_all(n, L, P.col(j).data(), Y.col(j).data());
    return Y;
}

// Moment data shared by every degree up to L: lower degrees use leading rows
// of Y and the leading block of the Gram B B^T, B = Y diag(sqrt(mu)).
struct RuleSystem {
    int L = 0;
    Mat Y;
    Vec mu, sq;
    Mat gram; // empty when rows outnumber centers
};

inline RuleSystem rule_system(const CenterSet& cs, int L)
{
    RuleSystem s;
    s.L = L;
    const std::vector<double> mu = voronoi_areas(cs);
    s.Y = harmonic_matrix(cs.n, L, cs.points);
    s.mu.resize(cs.size());
    s.sq.resize(cs.size());
    for (int i = 0; i < cs.size(); ++i) {
        s.mu(i) = mu[i];
        s.sq(i) = std::sqrt(mu[i]);
    }
    if (s.Y.rows() <= s.Y.cols()) {
        const Mat B = s.Y * s.sq.asDiagonal();
        s.gram = Mat::Zero(B.rows(), B.rows());
        s.gram.selfadjointView<Eigen::Lower>().rankUpdate(B);
    }
    return s;
}

// Positive weights exact on Pi_L: minimizer of sum (c - mu)^2 / mu under the
// moment equations, mu the Voronoi cell measures.
inline QuadratureRule solve_rule(const CenterSet& cs, const RuleSystem& sys, int L, const RuleOptions& opt)
{
    const int n = cs.n;
    const long M = harmonic_count(n, L);
    const auto Y = sys.Y.topRows(M);
    Vec m = Vec::Zero(M);
    m(0) = std::sqrt(sphere_volume(n));
    const Vec r = m - Y * sys.mu;

    QuadratureRule rule;
    rule.centers = std::make_shared<const CenterSet>(cs);
    rule.degree_L = L;
    rule.threshold = opt.threshold;
    rule.feasibility = cs.h * (L + lambda_of(n));
    bool solved = false;
    if (sys.gram.size() > 0) {
        Eigen::LLT<Mat> llt(sys.gram.topLeftCorner(M, M).selfadjointView<Eigen::Lower>());
        if (llt.info() == Eigen::Success) {
            rule.weights = sys.mu + sys.mu.cwiseProduct(Y.transpose() * llt.solve(r));
            rule.exactness_residual = (Y * rule.weights - m).cwiseAbs().maxCoeff();
            solved = rule.exactness_residual < 1e-9;
        }
    }
    if (!solved) {
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(Y * sys.sq.asDiagonal());
        cod.setThreshold(1e-12);
        rule.weights = sys.mu + sys.sq.cwiseProduct(cod.solve(r));
        rule.exactness_residual = (Y * rule.weights - m).cwiseAbs().maxCoeff();
    }
    if (rule.weights.minCoeff() <= 0.0)
        fail(ErrorCode::NegativeWeight, "geometry too irregular for degree " + std::to_string(L));
    if (!(rule.exactness_residual < 1e-9))
        fail(ErrorCode::InfeasibleMoments, "moment residual above 1e-9");
    return rule;
}

inline void check_rule_request(const CenterSet& cs, int L, const RuleOptions& opt)
{
    if (cs.n != 1 && cs.n != 2)
        fail(ErrorCode::UnsupportedDimension, "quadrature rules are built for n = 1, 2");
    require(L >= 0, "build_rule: L must be non-negative");
    const double feas = cs.h * (L + lambda_of(cs.n));
    require(feas <= opt.threshold, "build_rule: h(L+lambda) = " + std::to_string(feas) +
                                       " exceeds the feasibility threshold " + std::to_string(opt.threshold));
}

inline QuadratureRule build_rule(const CenterSet& cs, int L, const RuleOptions& opt = {})
{
    check_rule_request(cs, L, opt);
    return solve_rule(cs, rule_system(cs, L), L, opt);
}

// Tries L, L-1, ... until a positive rule is found.
inline QuadratureRule build_rule_backoff(const CenterSet& cs, int L, const RuleOptions& opt = {})
{
    if (cs.n != 1 && cs.n != 2)
        fail(ErrorCode::UnsupportedDimension, "quadrature rules are built for n = 1, 2");
    require(L >= 0, "build_rule: L must be non-negative");
    int top = L;
    while (top >= 0 && cs.h * (top + lambda_of(cs.n)) > opt.threshold)
        --top;
    if (top < 0)
        fail(ErrorCode::NegativeWeight, "no degree admits positive weights");
    const RuleSystem sys = rule_system(cs, top);
    for (int d = top; d >= 0; --d) {
        try {
            return solve_rule(cs, sys, d, opt);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NegativeWeight && e.code() != ErrorCode::InfeasibleMoments)
                throw;
        }
    }
    fail(ErrorCode::NegativeWeight, "no degree admits positive weights");
}

// L^p norm of an evaluable function on S^n, n = 1, 2.
inline double lp_norm_on_grid(const std::function<double(const Vec&)>& f, int n, double p, int band_hint)
{
    auto norm_on = [&](const SphereGrid& g) {
        std::vector<double> v(g.size());
        for (long k = 0; k < g.size(); ++k)
            v[k] = f(g.points.col(k));
        return lp_norm_values(v, g.weights, p);
    };
    if (p == 2.0)
        return norm_on(exact_grid(n, 2 * band_hint));
    const int D = 4 * band_hint + 16;
    double val = norm_on(exact_grid(n, D));
    if (std::isinf(p))
        val = std::max(val, norm_on(exact_grid(n, 2 * D + 1)));
    return val;
}

// | ||K||_1 - sum_xi mu(R_xi) |K(xi . zeta)| |
inline double mz_discrepancy(const BandKernel& K, const CenterSet& cs, const std::vector<double>& cell_measure,
                             const Vec& zeta)
{
    double s = 0.0;
    for (int i = 0; i < cs.size(); ++i)
        s += cell_measure[i] * std::abs(K(clamp_dot(cs.points.col(i).dot(zeta))));
    return std::abs(K.l1_norm() - s);
}

// max over zeta in X of sum_{xi != zeta} |K(xi . zeta)|.
inline double offdiag_kernel_sum(const BandKernel& K, const CenterSet& cs)
{
    const int N = cs.size();
    std::vector<double> row(N, 0.0);
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
            const double v = std::abs(K(clamp_dot(cs.points.col(i).dot(cs.points.col(j)))));
            row[i] += v;
            row[j] += v;
        }
    double m = 0.0;
    for (double v : row)
        m = std::max(m, v);
    return m;
}

} // namespace sbf
