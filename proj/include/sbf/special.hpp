#pragma once

#include "sbf/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace sbf {

constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

// log|x| with the sign of x kept separately; sign 0 means x == 0.
struct SignedLog {
    double log_abs = -inf;
    int sign = 0;

    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
    SignedLog operator*(const SignedLog& o) const { return {log_abs + o.log_abs, sign * o.sign}; }
    SignedLog operator/(const SignedLog& o) const { return {log_abs - o.log_abs, sign * o.sign}; }
};

inline SignedLog signed_log(double x)
{
    if (x == 0.0)
        return {};
    return {std::log(std::abs(x)), x > 0 ? 1 : -1};
}

inline bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

inline SignedLog lgamma_signed(double x)
{
    if (is_nonpositive_integer(x))
        fail(ErrorCode::PoleAtInteger, "Gamma pole at " + std::to_string(x));
    int sign = 1;
    if (x < 0.0 && (static_cast<long long>(std::floor(x)) % 2 != 0))
        sign = -1;
    return {std::lgamma(x), sign};
}

inline double lambda_of(int n) { return 0.5 * (n - 1); }

// Surface measure of S^n; omega_0 = 2 counts the two points of S^0.
inline double sphere_volume(int n)
{
    const double h = 0.5 * (n + 1);
    return 2.0 * std::pow(pi, h) / std::tgamma(h);
}

template <class Real = double>
struct GaussRule {
    std::vector<Real> x;
    std::vector<Real> w;
};

// Gauss-Legendre on [-1,1] by Newton iteration on the three-term recurrence.
template <class Real = double>
GaussRule<Real> gauss_legendre(int m)
{
    require(m >= 1, "gauss_legendre needs at least one node");
    GaussRule<Real> r;
    r.x.assign(m, Real(0));
    r.w.assign(m, Real(0));
    const Real eps = std::numeric_limits<Real>::epsilon();
    for (int i = 0; i < (m + 1) / 2; ++i) {
        Real z = std::cos(std::numbers::pi_v<Real> * (Real(i) + Real(0.75)) / (Real(m) + Real(0.5)));
        Real dp = 0;
        for (int it = 0; it < 100; ++it) {
            Real p0 = 1, p1 = z;
            for (int k = 2; k <= m; ++k) {
                Real p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (m == 1) {
                p1 = z;
                p0 = 1;
            }
            dp = m * (z * p1 - p0) / (z * z - 1);
            Real dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) <= 4 * eps)
                break;
        }
        {
            Real p0 = 1, p1 = z;
            for (int k = 2; k <= m; ++k) {
                Real p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (m == 1) {
                p1 = z;
                p0 = 1;
            }
            dp = m * (z * p1 - p0) / (z * z - 1);
        }
        const Real w = 2 / ((1 - z * z) * dp * dp);
        r.x[i] = -z;
        r.x[m - 1 - i] = z;
        r.w[i] = w;
        r.w[m - 1 - i] = w;
    }
    if (m % 2 == 1)
        r.x[m / 2] = 0;
    return r;
}

// Gauss-Jacobi for weight (1-x)^alpha (1+x)^beta via Golub-Welsch.
inline GaussRule<double> gauss_jacobi(int m, double alpha, double beta)
{
    require(m >= 1 && alpha > -1 && beta > -1, "gauss_jacobi: invalid parameters");
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    const double ab = alpha + beta;
    for (int k = 0; k < m; ++k) {
        const double d = 2.0 * k + ab;
        double a;
        if (k == 0)
            a = (beta - alpha) / (ab + 2.0);
        else
            a = (beta * beta - alpha * alpha) / (d * (d + 2.0));
        T(k, k) = a;
        if (k + 1 < m) {
            const double j = k + 1;
            const double dj = 2.0 * j + ab;
            double b2 = 4.0 * j * (j + alpha) * (j + beta) * (j + ab) / (dj * dj * (dj + 1.0) * (dj - 1.0));
            T(k, k + 1) = T(k + 1, k) = std::sqrt(b2);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) + std::lgamma(beta + 1.0) -
                                std::lgamma(ab + 2.0));
    GaussRule<double> r;
    r.x.resize(m);
    r.w.resize(m);
    for (int i = 0; i < m; ++i) {
        r.x[i] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        r.w[i] = mu0 * v * v;
    }
    return r;
}

// Composite Gauss-Legendre on [a,b] with panels graded geometrically toward b.
inline double integrate_graded(const std::function<double(double)>& f, double a, double b, int panels = 40,
                               double ratio = 0.5, int nodes = 24)
{
    static thread_local int cached_nodes = 0;
    static thread_local GaussRule<double> g;
    if (cached_nodes != nodes) {
        g = gauss_legendre<double>(nodes);
        cached_nodes = nodes;
    }
    std::vector<double> br{a};
    double len = b - a;
    double x = a;
    for (int k = 0; k < panels; ++k) {
        len *= ratio;
        x = b - len;
        br.push_back(x);
    }
    br.push_back(b);
    double s = 0.0;
    for (size_t k = 0; k + 1 < br.size(); ++k) {
        const double lo = br[k], hi = br[k + 1];
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        for (int i = 0; i < nodes; ++i)
            s += g.w[i] * h * f(c + h * g.x[i]);
    }
    return s;
}

// log I_{nu0+k}(x), k = 0..count-1, by Miller's downward recurrence for the
// ratios, normalized with the Gegenbauer expansion of e^{x} at t = 1.
// Requires nu0 = 0 (Chebyshev identity) or nu0 > 0.
inline std::vector<double> bessel_i_log_ladder(double nu0, double x, int count)
{
    require(x > 0 && count >= 1 && nu0 >= 0, "bessel_i_log_ladder: invalid arguments");
    const int M = count + static_cast<int>(2.0 * x) + 60;
    std::vector<double> r(M, 0.0); // r[k] = I_{nu0+k+1}/I_{nu0+k}
    double rk = 0.0;
    for (int k = M - 1; k >= 0; --k) {
        const double nu = nu0 + k + 1;
        rk = 1.0 / (2.0 * nu / x + rk);
        r[k] = rk;
    }
    std::vector<double> logratio(M, 0.0); // log(I_{nu0+k}/I_{nu0})
    for (int k = 1; k < M; ++k)
        logratio[k] = logratio[k - 1] + std::log(r[k - 1]);

    double log_i0;
    if (nu0 == 0.0) {
        double s = 1.0;
        for (int k = 1; k < M; ++k)
            s += 2.0 * std::exp(logratio[k]);
        log_i0 = x - std::log(s);
    } else {
        const double lam = nu0;
        double s = 0.0;
        double logc = 0.0; // log C_k^lam(1)
        for (int k = 0; k < M; ++k) {
            if (k > 0)
                logc += std::log((k + 2.0 * lam - 1.0) / k);
            s += (k + lam) * std::exp(logc + logratio[k]);
        }
        log_i0 = x + lam * std::log(0.5 * x) - std::lgamma(lam) - std::log(s);
    }
    std::vector<double> out(count);
    for (int k = 0; k < count; ++k)
        out[k] = log_i0 + logratio[k];
    return out;
}

// Gauss hypergeometric series, |z| < 1.
inline double hyp2f1_series(double a, double b, double c, double z, double tol = 1e-17, int max_terms = 200000)
{
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < max_terms; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if (std::abs(term) <= tol * std::abs(sum) && k > 2) {
            // ratio test for the remaining tail
            const double ratio = std::abs((a + k + 1) * (b + k + 1) / ((c + k + 1) * (k + 2.0)) * z);
            if (ratio < 1.0)
                return sum;
        }
    }
    fail(ErrorCode::SeriesNonConvergence, "2F1 partial sums did not settle");
}

// Weighted least-squares line fit y = a + b x with coefficient of determination.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, std::vector<double> w = {})
{
    const size_t m = x.size();
    require(m >= 2 && y.size() == m, "fit_line needs at least two points");
    if (w.empty())
        w.assign(m, 1.0);
    double sw = 0, sx = 0, sy = 0;
    for (size_t i = 0; i < m; ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < m; ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
        syy += w[i] * (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0, "fit_line: abscissae are all equal");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0;
    for (size_t i = 0; i < m; ++i) {
        const double e = y[i] - f.intercept - f.slope * x[i];
        sse += w[i] * e * e;
    }
    f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
    return f;
}

} // namespace sbf
