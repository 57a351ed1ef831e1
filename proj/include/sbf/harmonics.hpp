#pragma once

#include "sbf/error.hpp"
#include "sbf/geometry.hpp"
#include "sbf/special.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace sbf {

// C_l^lambda(t) by forward recurrence; lambda = 0 gives Chebyshev T_l.
inline double gegenbauer(double lambda, int l, double t)
{
    if (l == 0)
        return 1.0;
    if (lambda == 0.0) {
        double t0 = 1.0, t1 = t;
        for (int k = 2; k <= l; ++k) {
            const double t2 = 2.0 * t * t1 - t0;
            t0 = t1;
            t1 = t2;
        }
        return t1;
    }
    double c0 = 1.0, c1 = 2.0 * lambda * t;
    for (int k = 2; k <= l; ++k) {
        const double c2 = (2.0 * (k + lambda - 1.0) * t * c1 - (k + 2.0 * lambda - 2.0) * c0) / k;
        c0 = c1;
        c1 = c2;
    }
    return c1;
}

inline long long binom(long long a, long long b)
{
    if (b < 0 || a < 0 || b > a)
        return 0;
    b = std::min(b, a - b);
    long long r = 1;
    for (long long i = 1; i <= b; ++i)
        r = r * (a - b + i) / i;
    return r;
}

// d_l^n = dim of the degree-l eigenspace on S^n.
inline long long eigenspace_dim(int n, int l)
{
    require(n >= 1 && l >= 0, "eigenspace_dim: invalid arguments");
    return binom(l + n - 1, n - 1) + binom(l + n - 2, n - 1);
}

// dim Pi_L on S^n.
inline long long poly_space_dim(int n, int L)
{
    long long s = 0;
    for (int l = 0; l <= L; ++l)
        s += eigenspace_dim(n, l);
    return s;
}

inline double projection_kernel(int n, int l, double t)
{
    if (n == 1)
        return l == 0 ? 1.0 / (2.0 * pi) : gegenbauer(0.0, l, t) / pi;
    const double lam = lambda_of(n);
    return (l + lam) / (lam * sphere_volume(n)) * gegenbauer(lam, l, t);
}

// Evaluates t -> sum_l c_l P_l(t) with the recurrence coefficients folded in.
class ZonalSeries {
public:
    ZonalSeries() = default;
    ZonalSeries(int n, const std::vector<double>& c) : n_(n), lam_(lambda_of(n))
    {
        const int L = static_cast<int>(c.size()) - 1;
        a_.assign(L + 1, 0.0);
        b_.assign(L + 1, 0.0);
        w_.assign(L + 1, 0.0);
        const double om = sphere_volume(n);
        for (int k = 0; k <= L; ++k) {
            if (n == 1) {
                w_[k] = c[k] / (k == 0 ? 2.0 * pi : pi);
                a_[k] = 2.0;
                b_[k] = 1.0;
            } else {
                w_[k] = c[k] * (k + lam_) / (lam_ * om);
                if (k >= 2) {
                    a_[k] = 2.0 * (k + lam_ - 1.0) / k;
                    b_[k] = (k + 2.0 * lam_ - 2.0) / k;
                }
            }
        }
        // Drop trailing zero coefficients.
        while (!w_.empty() && w_.back() == 0.0)
            w_.pop_back();
    }

    double operator()(double t) const
    {
        const int L = static_cast<int>(w_.size()) - 1;
        if (L < 0)
            return 0.0;
        double c0 = 1.0;
        double s = w_[0];
        if (L == 0)
            return s;
        double c1 = n_ == 1 ? t : 2.0 * lam_ * t;
        s += w_[1] * c1;
        for (int k = 2; k <= L; ++k) {
            const double c2 = a_[k] * t * c1 - b_[k] * c0;
            s += w_[k] * c2;
            c0 = c1;
            c1 = c2;
        }
        return s;
    }

    int degree() const { return static_cast<int>(w_.size()) - 1; }

private:
    int n_ = 2;
    double lam_ = 0.5;
    std::vector<double> a_, b_, w_;
};

// Index layout of real orthonormal harmonics.
//   n = 1: l = 0 -> 0; l >= 1 -> 2l-1 (cos), 2l (sin).
//   n = 2: l^2 + (m-1) with m = 1 the zonal term, m = 2k cos(k phi), m = 2k+1 sin(k phi).
inline long harmonic_index(int n, int l, int m)
{
    if (n == 1)
        return l == 0 ? 0 : 2L * l - 2 + m;
    return static_cast<long>(l) * l + (m - 1);
}

inline int harmonic_degree(int n, long idx)
{
    if (n == 1)
        return static_cast<int>((idx + 1) / 2);
    return static_cast<int>(std::floor(std::sqrt(static_cast<double>(idx)) + 1e-9));
}

inline long harmonic_count(int n, int L) { return n == 1 ? 2L * L + 1 : static_cast<long>(L + 1) * (L + 1); }

// All real orthonormal harmonics of degree <= L at x, written to out.
inline void eval_harmonics_all(int n, int L, const double* x, double* out)
{
    if (n == 1) {
        const double c = x[0], s = x[1];
        out[0] = 1.0 / std::sqrt(2.0 * pi);
        const double f = 1.0 / std::sqrt(pi);
        double ck = 1.0, sk = 0.0;
        for (int l = 1; l <= L; ++l) {
            const double c2 = ck * c - sk * s;
            const double s2 = sk * c + ck * s;
            ck = c2;
            sk = s2;
            out[2 * l - 1] = f * ck;
            out[2 * l] = f * sk;
        }
        return;
    }
    if (n != 2)
        fail(ErrorCode::UnsupportedDimension, "pointwise harmonics only for n = 1, 2");
    const double z = std::clamp(x[2], -1.0, 1.0);
    const double rxy = std::hypot(x[0], x[1]);
    const double cphi = rxy > 0 ? x[0] / rxy : 1.0;
    const double sphi = rxy > 0 ? x[1] / rxy : 0.0;
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double sq2 = std::sqrt(2.0);
    double pkk = 1.0 / std::sqrt(4.0 * pi);
    double ck = 1.0, sk = 0.0;
    for (int k = 0; k <= L; ++k) {
        if (k > 0) {
            pkk *= std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * s;
            const double c2 = ck * cphi - sk * sphi;
            const double s2 = sk * cphi + ck * sphi;
            ck = c2;
            sk = s2;
        }
        double pm2 = 0.0, pm1 = pkk;
        for (int l = k; l <= L; ++l) {
            double p;
            if (l == k)
                p = pkk;
            else if (l == k + 1)
                p = std::sqrt(2.0 * k + 3.0) * z * pkk;
            else {
                const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(k) * k));
                const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(k) * k) /
                                           (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
                p = a * (z * pm1 - b * pm2);
            }
            if (l > k) {
                pm2 = pm1;
                pm1 = p;
            }
            const long base = static_cast<long>(l) * l;
            if (k == 0)
                out[base] = p;
            else {
                out[base + 2 * k - 1] = sq2 * p * ck;
                out[base + 2 * k] = sq2 * p * sk;
            }
        }
    }
}

inline double eval_harmonic(int n, int l, int m, const Vec& p)
{
    if (n != 1 && n != 2)
        fail(ErrorCode::UnsupportedDimension, "pointwise harmonics only for n = 1, 2");
    require(l >= 0 && m >= 1 && m <= eigenspace_dim(n, l), "eval_harmonic: index out of range");
    std::vector<double> buf(harmonic_count(n, l));
    eval_harmonics_all(n, l, p.data(), buf.data());
    return buf[harmonic_index(n, l, m)];
}

// Element of Pi_L in the real orthonormal basis. Real coefficients give
// real-valued functions in this basis, so no conjugation symmetry is needed.
struct PolynomialOnSphere {
    int n = 2;
    int degree = 0;
    Vec coeffs;

    static PolynomialOnSphere zero(int n, int L)
    {
        PolynomialOnSphere p;
        p.n = n;
        p.degree = L;
        p.coeffs = Vec::Zero(harmonic_count(n, L));
        return p;
    }

    double& at(int l, int m) { return coeffs(harmonic_index(n, l, m)); }
    double at(int l, int m) const { return coeffs(harmonic_index(n, l, m)); }

    double operator()(const Vec& x) const
    {
        std::vector<double> buf(coeffs.size());
        eval_harmonics_all(n, degree, x.data(), buf.data());
        double s = 0.0;
        for (long i = 0; i < coeffs.size(); ++i)
            s += coeffs(i) * buf[i];
        return s;
    }
};

inline PolynomialOnSphere random_polynomial(int n, int L, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    auto p = PolynomialOnSphere::zero(n, L);
    for (long i = 0; i < p.coeffs.size(); ++i)
        p.coeffs(i) = g(rng);
    return p;
}

inline PolynomialOnSphere apply_L_gamma(const PolynomialOnSphere& p, double gamma)
{
    PolynomialOnSphere r = p;
    const double lam = lambda_of(p.n);
    for (long i = 0; i < r.coeffs.size(); ++i) {
        const int l = harmonic_degree(p.n, i);
        if (l + lam == 0.0 && gamma < 0.0) {
            // The constants of S^1 span the null space of L.
            require(r.coeffs(i) == 0.0, "apply_L_gamma: negative power of L on the constants of S^1");
            continue;
        }
        r.coeffs(i) *= std::pow(l + lam, gamma);
    }
    return r;
}

// Values of a polynomial on a product grid. On S^2 the sum is organised ring
// by ring (associated Legendre values per ring, then azimuthal sums).
inline std::vector<double> synthesize(const PolynomialOnSphere& p, const SphereGrid& g)
{
    const int L = p.degree;
    std::vector<double> vals(g.size(), 0.0);
    if (p.n == 1) {
        for (long k = 0; k < g.size(); ++k) {
            const double a = 2.0 * pi * k / g.nphi;
            double s = p.coeffs(0) / std::sqrt(2.0 * pi);
            for (int l = 1; l <= L; ++l)
                s += (p.coeffs(2 * l - 1) * std::cos(l * a) + p.coeffs(2 * l) * std::sin(l * a)) / std::sqrt(pi);
            vals[k] = s;
        }
        return vals;
    }
    require(p.n == 2 && g.n == 2, "synthesize: dimension mismatch");
    const int R = static_cast<int>(g.ring_z.size());
    const int P = g.nphi;
    std::vector<double> buf(harmonic_count(2, L));
    std::vector<double> cosk(L + 1), sink(L + 1);
    std::vector<double> Ck(L + 1), Sk(L + 1);
    for (int r = 0; r < R; ++r) {
        // Harmonics at azimuth 0 give the normalized Legendre factors.
        const double z = g.ring_z[r];
        const double x[3] = {std::sqrt(std::max(0.0, 1.0 - z * z)), 0.0, z};
        eval_harmonics_all(2, L, x, buf.data());
        for (int k = 0; k <= L; ++k) {
            double c = 0.0, s = 0.0;
            for (int l = k; l <= L; ++l) {
                const long base = static_cast<long>(l) * l;
                if (k == 0)
                    c += p.coeffs(base) * buf[base];
                else {
                    const double leg = buf[base + 2 * k - 1]; // sqrt2 * pbar at phi = 0
                    c += p.coeffs(base + 2 * k - 1) * leg;
                    s += p.coeffs(base + 2 * k) * leg;
                }
            }
            Ck[k] = c;
            Sk[k] = s;
        }
        for (int j = 0; j < P; ++j) {
            const double a = 2.0 * pi * j / P;
            const double ca = std::cos(a), sa = std::sin(a);
            double cc = 1.0, ss = 0.0, v = Ck[0];
            for (int k = 1; k <= L; ++k) {
                const double c2 = cc * ca - ss * sa;
                const double s2 = ss * ca + cc * sa;
                cc = c2;
                ss = s2;
                v += Ck[k] * cc + Sk[k] * ss;
            }
            vals[static_cast<long>(r) * P + j] = v;
        }
    }
    return vals;
}

inline double lp_norm_values(const std::vector<double>& v, const std::vector<double>& w, double p)
{
    if (std::isinf(p)) {
        double m = 0.0;
        for (double x : v)
            m = std::max(m, std::abs(x));
        return m;
    }
    double s = 0.0;
    for (size_t i = 0; i < v.size(); ++i)
        s += w[i] * std::pow(std::abs(v[i]), p);
    return std::pow(s, 1.0 / p);
}

// L^p norm of a polynomial: exact grid for p = 2, finer grids otherwise.
inline double poly_lp_norm(const PolynomialOnSphere& S, double p)
{
    if (p == 2.0) {
        const SphereGrid g = exact_grid(S.n, 2 * S.degree);
        return lp_norm_values(synthesize(S, g), g.weights, p);
    }
    const int D = 4 * S.degree + 16;
    const SphereGrid g = exact_grid(S.n, D);
    double val = lp_norm_values(synthesize(S, g), g.weights, p);
    if (std::isinf(p)) {
        const SphereGrid g2 = exact_grid(S.n, 2 * D + 1);
        val = std::max(val, lp_norm_values(synthesize(S, g2), g2.weights, p));
    }
    return val;
}

// L^p norm of x -> F(x.eta) for F = sum_l c_l P_l: Parseval for p = 2,
// otherwise Gauss-Legendre in theta against sin^{n-1}(theta).
inline double zonal_lp_norm(const std::vector<double>& c, int n, double p, int min_nodes = 0)
{
    const double om = sphere_volume(n);
    if (p == 2.0) {
        double s = 0.0;
        for (size_t l = 0; l < c.size(); ++l)
            s += c[l] * c[l] * static_cast<double>(eigenspace_dim(n, static_cast<int>(l))) / om;
        return std::sqrt(s);
    }
    const ZonalSeries F(n, c);
    const int nodes = std::max(min_nodes, 2 * F.degree() + 64);
    const auto g = gauss_legendre<double>(nodes);
    double s = 0.0, mx = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double th = 0.5 * pi * (g.x[i] + 1.0);
        const double v = std::abs(F(std::cos(th)));
        mx = std::max(mx, v);
        if (!std::isinf(p))
            s += 0.5 * pi * g.w[i] * std::pow(v, p) * std::pow(std::sin(th), n - 1);
    }
    if (std::isinf(p))
        return std::max(mx, std::max(std::abs(F(1.0)), std::abs(F(-1.0))));
    return std::pow(sphere_volume(n - 1) * s, 1.0 / p);
}

} // namespace sbf
