#pragma once

#include "sbf/error.hpp"
#include "sbf/harmonics.hpp"
#include "sbf/special.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace sbf {

enum class Family { Green, TPS, Wendland, Gaussian, Multiquadric, Generating, Poisson, Custom };

inline const char* family_name(Family f)
{
    switch (f) {
    case Family::Green: return "green";
    case Family::TPS: return "tps";
    case Family::Wendland: return "wendland";
    case Family::Gaussian: return "gaussian";
    case Family::Multiquadric: return "multiquadric";
    case Family::Generating: return "generating";
    case Family::Poisson: return "poisson";
    case Family::Custom: return "custom";
    }
    return "custom";
}

// How the coefficients behave beyond the stored range.
enum class TailModel { Finite, Algebraic, Geometric, Divergent };

struct ZonalKernel {
    int n = 2;
    Family family = Family::Custom;
    std::vector<double> coeffs;     // phi_hat(l) as used by networks (positive)
    std::vector<double> log_coeffs; // log phi_hat(l); finite where coeffs underflow
    std::vector<double> raw_low;    // true coefficients below poly_part
    int poly_part = 0;              // L0: coefficients below this were replaced
    std::function<double(double)> closed_form;
    TailModel tail_model = TailModel::Finite;
    double decay_exponent = 0.0;    // phi_hat ~ nu^{-a} for the algebraic model
    std::vector<std::pair<std::string, double>> params;
    std::string note;

    std::vector<double> suffix;     // suffix[L] = sum_{L<l<=lmax} phi_hat d_l / omega_n
    double remainder = 0.0;         // estimate of the sum beyond lmax
    std::shared_ptr<const ZonalSeries> series;

    int lmax() const { return static_cast<int>(coeffs.size()) - 1; }
    double lambda() const { return lambda_of(n); }
    double nu(int l) const { return l + lambda(); }
    bool has_closed_form() const { return static_cast<bool>(closed_form); }

    double param(const std::string& key) const
    {
        for (const auto& [k, v] : params)
            if (k == key)
                return v;
        throw std::invalid_argument("kernel has no parameter " + key);
    }

    // Upper bound on sum_{l>L} phi_hat(l) d_l / omega_n (sup-norm of the tail).
    double tail_bound(int L) const
    {
        if (std::isinf(remainder))
            return inf;
        if (L >= lmax())
            return remainder;
        if (L < 0)
            L = -1;
        return (L < 0 ? suffix_all() : suffix[L]) + remainder;
    }

    double suffix_all() const { return suffix.empty() ? 0.0 : suffix[0] + coeffs[0] / sphere_volume(n); }

    double eval_series(double t) const { return (*series)(t); }

    // phi(t) for the stored coefficient sequence, via the closed form when
    // available (corrected for any continuation below poly_part).
    double eval(double t) const
    {
        double v;
        if (closed_form) {
            v = closed_form(t);
            for (int l = 0; l < poly_part && l < static_cast<int>(raw_low.size()); ++l)
                v += (coeffs[l] - raw_low[l]) * projection_kernel(n, l, t);
        } else {
            if (std::isinf(remainder) && t >= 1.0 - 1e-15)
                fail(ErrorCode::DivergentSeries, "series kernel evaluated at its singular point");
            v = eval_series(t);
        }
        if (!std::isfinite(v))
            fail(ErrorCode::DivergentSeries, "kernel value is not finite at t = " + std::to_string(t));
        return v;
    }
};

// Completes derived fields once coeffs / log_coeffs are set.
inline void finalize_kernel(ZonalKernel& k)
{
    const int L = static_cast<int>(k.coeffs.size()) - 1;
    require(L >= 0, "kernel needs at least one coefficient");
    if (k.log_coeffs.size() != k.coeffs.size()) {
        k.log_coeffs.resize(k.coeffs.size());
        for (int l = 0; l <= L; ++l)
            k.log_coeffs[l] = k.coeffs[l] > 0 ? std::log(k.coeffs[l]) : -inf;
    }
    const double om = sphere_volume(k.n);
    k.suffix.assign(L + 1, 0.0);
    double s = 0.0;
    for (int l = L; l >= 1; --l) {
        s += k.coeffs[l] * static_cast<double>(eigenspace_dim(k.n, l)) / om;
        k.suffix[l - 1] = s;
    }
    const double tL = k.coeffs[L] * static_cast<double>(eigenspace_dim(k.n, L)) / om;
    switch (k.tail_model) {
    case TailModel::Finite: k.remainder = 0.0; break;
    case TailModel::Divergent: k.remainder = inf; break;
    case TailModel::Algebraic:
        if (k.decay_exponent <= k.n)
            k.remainder = inf;
        else
            k.remainder = tL * k.nu(L) / (k.decay_exponent - k.n);
        break;
    case TailModel::Geometric: {
        double r = 0.0;
        if (L >= 1 && k.coeffs[L - 1] > 0) {
            const double dr = static_cast<double>(eigenspace_dim(k.n, L + 1)) / eigenspace_dim(k.n, L);
            r = std::exp(k.log_coeffs[L] - k.log_coeffs[L - 1]) * dr;
        }
        k.remainder = r < 1.0 ? tL * r / (1.0 - r) : inf;
        break;
    }
    }
    k.series = std::make_shared<const ZonalSeries>(k.n, k.coeffs);
}

// phi_hat(l) = omega_{n-1} / G_l(1) * int_0^pi phi(cos th) G_l(cos th) sin^{n-1} th dth,
// graded toward th = 0 where the catalog kernels are singular.
inline double funk_hecke_coefficient(const std::function<double(double)>& phi, int n, int l)
{
    const double lam = lambda_of(n);
    auto g = [&](double x) {
        const double th = pi - x;
        const double t = std::cos(th);
        return phi(t) * gegenbauer(lam, l, t) * std::pow(std::sin(th), n - 1);
    };
    const double I = integrate_graded(g, 0.0, pi, 48, 0.5, 32);
    return sphere_volume(n - 1) / gegenbauer(lam, l, 1.0) * I;
}

inline void apply_continuation(ZonalKernel& k, int L0, double exponent)
{
    k.poly_part = L0;
    k.raw_low.assign(k.coeffs.begin(), k.coeffs.begin() + std::min<int>(L0, k.coeffs.size()));
    if (L0 <= 0 || L0 > k.lmax())
        return;
    for (int l = 0; l < L0; ++l) {
        k.log_coeffs[l] = k.log_coeffs[L0] + exponent * std::log(k.nu(L0) / k.nu(l));
        k.coeffs[l] = std::exp(k.log_coeffs[l]);
    }
    k.note = "coefficients below l=" + std::to_string(L0) +
             " replaced by the positive continuation phi(L0)((L0+lambda)/(l+lambda))^" + std::to_string(exponent);
}

inline ZonalKernel make_green(int n, double beta, const std::vector<double>& psi_hat = {}, int lmax = 1024)
{
    require(beta > 0, "make_green: beta must be positive");
    ZonalKernel k;
    k.n = n;
    k.family = Family::Green;
    k.params = {{"beta", beta}};
    k.coeffs.resize(lmax + 1);
    k.log_coeffs.resize(lmax + 1);
    for (int l = 0; l <= lmax; ++l) {
        const double pert = 1.0 + (l < static_cast<int>(psi_hat.size()) ? psi_hat[l] : 0.0);
        if (!(pert > 0))
            fail(ErrorCode::InvalidPerturbation, "1 + psi_hat(" + std::to_string(l) + ") <= 0");
        k.log_coeffs[l] = -beta * std::log(k.nu(l)) + std::log(pert);
        k.coeffs[l] = std::exp(k.log_coeffs[l]);
    }
    k.tail_model = TailModel::Algebraic;
    k.decay_exponent = beta;
    finalize_kernel(k);
    return k;
}

// Leading constant |C_{s,n}| in phi_hat(l) ~ |C_{s,n}| nu^{-2s-n}.
inline double tps_constant(int n, double s)
{
    double lc = (s + n) * std::log(2.0) + 0.5 * n * std::log(pi) + std::lgamma(s + 1.0) + std::lgamma(s + 0.5 * n);
    if (s != std::floor(s))
        lc += std::log(std::abs(std::sin(pi * s)) / pi);
    return std::exp(lc);
}

inline ZonalKernel make_tps(int n, double s, int lmax = 1024)
{
    require(s > -0.5 * n, "make_tps: need s > -n/2");
    ZonalKernel k;
    k.n = n;
    k.family = Family::TPS;
    k.params = {{"s", s}};
    const bool integer = s == std::floor(s);
    k.coeffs.resize(lmax + 1);
    k.log_coeffs.resize(lmax + 1);
    // log|C| with its sign.
    SignedLog C{(s + n) * std::log(2.0) + 0.5 * n * std::log(pi), 1};
    C = C * lgamma_signed(s + 1.0) * lgamma_signed(s + 0.5 * n);
    int L0 = 0;
    if (integer) {
        const int si = static_cast<int>(s);
        L0 = si + 1;
        const double sg = (si + 1) % 2 == 0 ? 1.0 : -1.0;
        k.closed_form = [s, sg](double t) {
            const double u = 1.0 - t;
            if (u <= 0.0)
                return s > 0 ? 0.0 : inf;
            return sg * std::pow(u, s) * std::log(u);
        };
        for (int l = 0; l <= lmax; ++l) {
            if (l <= si) {
                const double v = funk_hecke_coefficient(k.closed_form, n, l);
                k.coeffs[l] = v;
                k.log_coeffs[l] = v > 0 ? std::log(v) : -inf;
            } else {
                SignedLog v = C * lgamma_signed(l - s) / lgamma_signed(l + s + n);
                k.coeffs[l] = v.value();
                k.log_coeffs[l] = v.log_abs;
            }
        }
    } else {
        const double sp = std::max(s, 0.0);
        const int cs = static_cast<int>(std::ceil(sp));
        L0 = s > 0 ? cs : 0;
        const double sign_phi = cs % 2 == 0 ? 1.0 : -1.0;
        k.closed_form = [s, sign_phi](double t) {
            const double u = 1.0 - t;
            if (u <= 0.0)
                return s > 0 ? 0.0 : inf;
            return sign_phi * std::pow(u, s);
        };
        C = C * signed_log(std::sin(pi * s) / pi);
        const int fix = -static_cast<int>(sign_phi);
        for (int l = 0; l <= lmax; ++l) {
            SignedLog v = C * lgamma_signed(l - s) / lgamma_signed(l + s + n);
            v.sign *= fix;
            k.coeffs[l] = v.value();
            k.log_coeffs[l] = v.log_abs;
        }
    }
    k.params.emplace_back("C_sn", std::exp(C.log_abs));
    for (int l = L0; l <= lmax; ++l)
        if (!(k.coeffs[l] > 0))
            throw std::logic_error("TPS coefficient not positive above the polynomial part");
    k.tail_model = TailModel::Algebraic;
    k.decay_exponent = 2.0 * s + n;
    apply_continuation(k, L0, 2.0 * s + n);
    finalize_kernel(k);
    return k;
}

// Wendland function psi_{m,k}(r) on [0,1] as monomial coefficients, from
// (1-r)^m by k applications of f -> int_r^1 s f(s) ds, normalized to psi(0)=1.
inline std::vector<long double> wendland_polynomial(int m, int kk)
{
    std::vector<long double> c(m + 1, 0.0L);
    for (int j = 0; j <= m; ++j)
        c[j] = static_cast<long double>(binom(m, j)) * ((j % 2) ? -1.0L : 1.0L);
    for (int it = 0; it < kk; ++it) {
        std::vector<long double> nc(c.size() + 2, 0.0L);
        long double constant = 0.0L;
        for (size_t j = 0; j < c.size(); ++j) {
            constant += c[j] / (j + 2.0L);
            nc[j + 2] -= c[j] / (j + 2.0L);
        }
        nc[0] = constant;
        c.swap(nc);
    }
    const long double c0 = c[0];
    for (auto& x : c)
        x /= c0;
    return c;
}

inline ZonalKernel make_wendland(int n, int d, int kk, double t0, int lmax = 1024)
{
    require(d >= 1 && kk >= 0, "make_wendland: need d >= 1, k >= 0");
    require(t0 > -1.0 && t0 < 1.0, "make_wendland: t0 must lie in (-1,1)");
    const int m = d / 2 + kk + 1;
    const std::vector<long double> W = wendland_polynomial(m, kk);
    const int degW = static_cast<int>(W.size()) - 1;
    auto Weval = [W](long double r) {
        long double v = 0.0L;
        for (int j = static_cast<int>(W.size()) - 1; j >= 0; --j)
            v = v * r + W[j];
        return v;
    };
    ZonalKernel k;
    k.n = n;
    k.family = Family::Wendland;
    k.params = {{"d", double(d)}, {"k", double(kk)}, {"t0", t0}};
    const long double span = 1.0L - t0;
    k.closed_form = [Weval, t0, span](double t) {
        if (t <= t0)
            return 0.0;
        const long double r = std::sqrt(std::max(0.0L, (1.0L - t) / span));
        return static_cast<double>(Weval(r));
    };

    const long double lam = 0.5L * (n - 1);
    const long double om1 = sphere_volume(n - 1);
    // All coefficients at once: t = 1 - span u^2, u in [0,1].
    auto compute = [&](int nodes) {
        const auto g = gauss_legendre<long double>(nodes);
        std::vector<long double> acc(lmax + 1, 0.0L);
        std::vector<long double> G(lmax + 1);
        for (int i = 0; i < nodes; ++i) {
            const long double u = 0.5L * (g.x[i] + 1.0L);
            const long double wq = 0.5L * g.w[i];
            const long double t = 1.0L - span * u * u;
            const long double one_m_t2 = span * u * u * (2.0L - span * u * u);
            long double jac = 2.0L * span * u;
            if (n == 1)
                jac = 2.0L * span / std::sqrt(span * (2.0L - span * u * u));
            else
                jac *= std::pow(one_m_t2, lam - 0.5L);
            const long double f = Weval(u) * jac * wq;
            long double c0 = 1.0L, c1 = n == 1 ? t : 2.0L * lam * t;
            acc[0] += f;
            if (lmax >= 1)
                acc[1] += f * c1;
            for (int l = 2; l <= lmax; ++l) {
                long double c2 = n == 1 ? 2.0L * t * c1 - c0
                                        : (2.0L * (l + lam - 1.0L) * t * c1 - (l + 2.0L * lam - 2.0L) * c0) / l;
                acc[l] += f * c2;
                c0 = c1;
                c1 = c2;
            }
        }
        // Divide by G_l(1).
        long double c0 = 1.0L, c1 = n == 1 ? 1.0L : 2.0L * lam;
        for (int l = 0; l <= lmax; ++l) {
            long double gl;
            if (l == 0)
                gl = 1.0L;
            else if (l == 1)
                gl = c1;
            else {
                gl = n == 1 ? 1.0L : (2.0L * (l + lam - 1.0L) * c1 - (l + 2.0L * lam - 2.0L) * c0) / l;
                c0 = c1;
                c1 = gl;
            }
            acc[l] = om1 * acc[l] / gl;
        }
        return acc;
    };
    int nodes = (degW + 2 * lmax + 2 * n + 4) / 2 + 16;
    std::vector<long double> a = compute(nodes);
    bool ok = false;
    for (int attempt = 0; attempt < 6; ++attempt) {
        const int nodes2 = n % 2 == 0 ? nodes + 40 : 2 * nodes;
        std::vector<long double> b = compute(nodes2);
        long double diff = 0.0L;
        for (int l = 0; l <= lmax; ++l)
            diff = std::max(diff, std::abs(a[l] - b[l]));
        a.swap(b);
        nodes = nodes2;
        if (diff <= 1e-15L * std::abs(a[0])) {
            ok = true;
            break;
        }
    }
    if (!ok)
        fail(ErrorCode::QuadratureNonConvergence, "Wendland coefficients did not settle");
    k.coeffs.resize(lmax + 1);
    k.log_coeffs.resize(lmax + 1);
    for (int l = 0; l <= lmax; ++l) {
        k.coeffs[l] = static_cast<double>(a[l]);
        k.log_coeffs[l] = a[l] > 0 ? std::log(static_cast<double>(a[l])) : -inf;
    }
    k.tail_model = TailModel::Algebraic;
    k.decay_exponent = 2.0 * kk + 1.0 + n;
    finalize_kernel(k);
    return k;
}

inline ZonalKernel make_gaussian(int n, double sigma, int lmax = 256)
{
    require(sigma > 0, "make_gaussian: sigma must be positive");
    ZonalKernel k;
    k.n = n;
    k.family = Family::Gaussian;
    k.params = {{"sigma", sigma}};
    const double lam = lambda_of(n);
    const auto logI = bessel_i_log_ladder(lam, 2.0 * sigma, lmax + 1);
    k.coeffs.resize(lmax + 1);
    k.log_coeffs.resize(lmax + 1);
    const double pre = std::log(2.0 * pi) + lam * std::log(pi / sigma) - 2.0 * sigma;
    for (int l = 0; l <= lmax; ++l) {
        k.log_coeffs[l] = pre + logI[l];
        k.coeffs[l] = std::exp(k.log_coeffs[l]);
    }
    k.closed_form = [sigma](double t) { return std::exp(-2.0 * sigma * (1.0 - t)); };
    k.tail_model = TailModel::Geometric;
    finalize_kernel(k);
    return k;
}

// Multiquadric -sqrt(delta^2 + 2(1-t)); l = 0 is the (negative) polynomial part.
inline double multiquadric_formula(int n, double delta, int l)
{
    const double lam = lambda_of(n);
    const double D = delta * delta + 2.0;
    SignedLog pre{(lam + 0.5) * std::log(pi) - (l - 0.5) * std::log(D), 1};
    pre = pre * lgamma_signed(l - 0.5) / lgamma_signed(l + lam + 1.0);
    const double F = hyp2f1_series(0.5 * (l - 0.5), 0.5 * (l + 0.5), l + lam + 1.0, 4.0 / (D * D));
    return pre.value() * F;
}

inline ZonalKernel make_multiquadric(int n, double delta, int lmax = 256)
{
    require(delta > 0, "make_multiquadric: delta must be positive");
    ZonalKernel k;
    k.n = n;
    k.family = Family::Multiquadric;
    k.params = {{"delta", delta}};
    k.closed_form = [delta](double t) { return -std::sqrt(delta * delta + 2.0 * (1.0 - t)); };
    k.coeffs.resize(lmax + 1);
    k.log_coeffs.resize(lmax + 1);
    const double lam = lambda_of(n);
    const double D = delta * delta + 2.0;
    for (int l = 0; l <= lmax; ++l) {
        if (l == 0) {
            k.coeffs[0] = funk_hecke_coefficient(k.closed_form, n, 0);
            k.log_coeffs[0] = -inf;
            continue;
        }
        SignedLog pre{(lam + 0.5) * std::log(pi) - (l - 0.5) * std::log(D), 1};
        pre = pre * lgamma_signed(l - 0.5) / lgamma_signed(l + lam + 1.0);
        const double F = hyp2f1_series(0.5 * (l - 0.5), 0.5 * (l + 0.5), l + lam + 1.0, 4.0 / (D * D));
        k.log_coeffs[l] = pre.log_abs + std::log(F);
        k.coeffs[l] = std::exp(k.log_coeffs[l]);
    }
    k.tail_model = TailModel::Geometric;
    apply_continuation(k, 1, n + 1.0);
    finalize_kernel(k);
    return k;
}

inline ZonalKernel make_generating(int n, double w, int lmax = 256)
{
    require(w > 0 && w < 1, "make_generating: w must lie in (0,1)");
    ZonalKernel k;
    k.n = n;
    k.family = n == 1 ? Family::Poisson : Family::Generating;
    k.params = {{"w", w}};
    k.coeffs.resize(lmax + 1);
    k.log_coeffs.resize(lmax + 1);
    for (int l = 0; l <= lmax; ++l) {
        k.log_coeffs[l] = l * std::log(w) + ((n == 1 && l > 0) ? std::log(2.0) : 0.0);
        k.coeffs[l] = std::exp(k.log_coeffs[l]);
    }
    if (n == 1) {
        k.closed_form = [w](double t) {
            const double P = (1.0 - w * w) / (1.0 - 2.0 * t * w + w * w);
            return (2.0 * P - 1.0) / (2.0 * pi);
        };
    } else {
        const double lam = lambda_of(n), om = sphere_volume(n);
        k.closed_form = [w, lam, om](double t) {
            return (1.0 - w * w) / (om * std::pow(1.0 - 2.0 * t * w + w * w, lam + 1.0));
        };
    }
    k.tail_model = TailModel::Geometric;
    finalize_kernel(k);
    return k;
}

inline ZonalKernel make_custom(int n, std::vector<double> coeffs, TailModel tail = TailModel::Finite,
                               double decay = 0.0)
{
    ZonalKernel k;
    k.n = n;
    k.family = Family::Custom;
    k.coeffs = std::move(coeffs);
    k.tail_model = tail;
    k.decay_exponent = decay;
    finalize_kernel(k);
    return k;
}

inline double log_min_coeff(const ZonalKernel& k, int L, double delta = 0.0)
{
    require(L >= 0 && L <= k.lmax(), "min_coeff_profile: L beyond stored range");
    double m = inf;
    for (int l = 0; l <= L; ++l)
        m = std::min(m, k.log_coeffs[l] + delta * std::log(k.nu(l)));
    return m;
}

// min_{0<=l<=L} (l+lambda)^delta phi_hat(l).
inline double min_coeff_profile(const ZonalKernel& k, double delta, int L)
{
    return std::exp(log_min_coeff(k, L, delta));
}

// L^gamma phi: coefficients scaled by (l+lambda)^gamma, closed form dropped.
inline ZonalKernel lp_kernel_transform(const ZonalKernel& k, double gamma)
{
    ZonalKernel r;
    r.n = k.n;
    r.family = Family::Custom;
    r.params = k.params;
    r.params.emplace_back("gamma", gamma);
    r.coeffs.resize(k.coeffs.size());
    r.log_coeffs.resize(k.coeffs.size());
    for (int l = 0; l <= k.lmax(); ++l) {
        const double f = gamma * std::log(k.nu(l));
        r.log_coeffs[l] = k.log_coeffs[l] + f;
        r.coeffs[l] = k.coeffs[l] * std::pow(k.nu(l), gamma);
    }
    r.tail_model = k.tail_model;
    r.decay_exponent = k.decay_exponent - gamma;
    r.note = k.note;
    finalize_kernel(r);
    return r;
}

// Computable upper proxy for E_L(phi)_p: the sup-norm tail sum for p = inf,
// times omega_n^{1/p} otherwise (so p = 1 multiplies by omega_n).
inline double best_poly_error(const ZonalKernel& k, int L, double p)
{
    const double t = k.tail_bound(L);
    if (std::isinf(t))
        fail(ErrorCode::DivergentSeries, "kernel tail does not converge");
    if (std::isinf(p))
        return t;
    return t * std::pow(sphere_volume(k.n), 1.0 / p);
}

} // namespace sbf
