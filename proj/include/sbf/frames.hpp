#pragma once

#include "sbf/error.hpp"
#include "sbf/harmonics.hpp"
#include "sbf/kernels.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace sbf {

// C-infinity ramp: 0 for x <= 0, 1 for x >= 1.
inline double smooth_ramp(double x)
{
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;
    const double f = std::exp(-1.0 / x), g = std::exp(-1.0 / (1.0 - x));
    return f / (f + g);
}

struct MaskPair {
    int smoothness_k = 3;

    double a2(double t) const
    {
        t = std::abs(t);
        if (t <= 0.5 || t >= 2.0)
            return 0.0;
        if (t <= 1.0) {
            const double s = std::sin(0.5 * pi * smooth_ramp(2.0 * t - 1.0));
            return s * s;
        }
        const double c = std::cos(0.5 * pi * smooth_ramp(t - 1.0));
        return c * c;
    }
    double a(double t) const { return std::sqrt(a2(t)); }
    double b(double t) const { return std::abs(t) <= 1.0 ? 1.0 : a2(t); }
};

inline MaskPair build_mask(int k)
{
    require(k >= 3, "build_mask: smoothness k must be at least 3");
    return MaskPair{k};
}

// Max of | |a(t)|^2 + |a(2t)|^2 - 1 | on a uniform grid over [1/2, 1].
inline double mask_partition_error(const MaskPair& m, int samples = 1001)
{
    double e = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = 0.5 + 0.5 * i / (samples - 1);
        e = std::max(e, std::abs(m.a2(t) + m.a2(2.0 * t) - 1.0));
    }
    return e;
}

enum class EnvelopeKind { Gaussian, Bump, MaskSquared, B, One };

struct Envelope {
    EnvelopeKind kind = EnvelopeKind::Bump;
    double lo = 0.5, hi = 2.0; // bump support in |t|
    double sharpness = 10.0;   // bump exponent scale; peak value stays 1

    static Envelope gaussian() { return {EnvelopeKind::Gaussian, 0, 0}; }
    static Envelope bump(double lo = 0.5, double hi = 2.0, double sharpness = 10.0)
    {
        return {EnvelopeKind::Bump, lo, hi, sharpness};
    }
    static Envelope mask_squared() { return {EnvelopeKind::MaskSquared, 0.5, 2.0}; }
    static Envelope b_function() { return {EnvelopeKind::B, 0.0, 2.0}; }
    static Envelope one() { return {EnvelopeKind::One, 0, 0}; }

    double operator()(double t) const
    {
        t = std::abs(t);
        switch (kind) {
        case EnvelopeKind::Gaussian: return std::exp(-t * t);
        case EnvelopeKind::Bump: {
            if (t <= lo || t >= hi)
                return 0.0;
            const double half = 0.5 * (hi - lo);
            return std::exp(sharpness * (1.0 - half * half / ((t - lo) * (hi - t))));
        }
        case EnvelopeKind::MaskSquared: return MaskPair{}.a2(t);
        case EnvelopeKind::B: return MaskPair{}.b(t);
        case EnvelopeKind::One: return 1.0;
        }
        return 0.0;
    }

    bool compact() const { return kind == EnvelopeKind::Bump || kind == EnvelopeKind::MaskSquared || kind == EnvelopeKind::B; }
    double support_hi() const { return compact() ? hi : inf; }

    std::string name() const
    {
        switch (kind) {
        case EnvelopeKind::Gaussian: return "gaussian";
        case EnvelopeKind::Bump: return "bump";
        case EnvelopeKind::MaskSquared: return "mask_squared";
        case EnvelopeKind::B: return "b";
        case EnvelopeKind::One: return "one";
        }
        return "bump";
    }
};

inline Envelope envelope_from_name(const std::string& s)
{
    if (s == "gaussian")
        return Envelope::gaussian();
    if (s == "bump")
        return Envelope::bump();
    if (s == "mask_squared")
        return Envelope::mask_squared();
    if (s == "b")
        return Envelope::b_function();
    if (s == "one")
        return Envelope::one();
    throw std::invalid_argument("unknown envelope " + s);
}

// Largest degree at which kappa(eps (l + lambda)) can be non-negligible.
inline int envelope_band_limit(const Envelope& kappa, int n, double eps, int cap)
{
    const double lam = lambda_of(n);
    double top;
    if (kappa.compact())
        top = kappa.support_hi() / eps;
    else if (kappa.kind == EnvelopeKind::Gaussian)
        top = 6.2 / eps; // exp(-t^2) < 1e-16 beyond
    else
        return cap;
    return std::min(cap, std::max(0, static_cast<int>(std::ceil(top - lam))));
}

struct BandKernel {
    Envelope kappa;
    double eps = 1.0;
    int n = 2;
    int decay_order_k = 6;
    std::vector<double> coeffs;
    ZonalSeries series;

    double operator()(double t) const { return series(t); }
    int lmax() const { return static_cast<int>(coeffs.size()) - 1; }

    double value_at_one_identity() const
    {
        double s = 0.0;
        for (int l = 0; l <= lmax(); ++l)
            s += coeffs[l] * static_cast<double>(eigenspace_dim(n, l));
        return s / sphere_volume(n);
    }
    double l1_norm() const { return zonal_lp_norm(coeffs, n, 1.0, 4 * lmax() + 256); }
};

inline BandKernel make_band_kernel(const Envelope& kappa, int n, double eps, int cap = 4096)
{
    require(eps > 0.0 && eps <= 1.0, "band_kernel: eps must lie in (0,1]");
    if (!kappa.compact() && kappa.kind != EnvelopeKind::Gaussian && cap >= 1 << 20)
        fail(ErrorCode::DivergentSeries, "envelope lacks decay for a truncation certificate");
    BandKernel K;
    K.kappa = kappa;
    K.eps = eps;
    K.n = n;
    const int L = envelope_band_limit(kappa, n, eps, cap);
    K.coeffs.resize(L + 1);
    for (int l = 0; l <= L; ++l)
        K.coeffs[l] = kappa(eps * (l + lambda_of(n)));
    K.series = ZonalSeries(n, K.coeffs);
    return K;
}

inline double band_kernel(const Envelope& kappa, int n, double eps, double t)
{
    return make_band_kernel(kappa, n, eps)(t);
}

// sup over a theta grid of |K(cos th)| (1 + (th/eps)^k) eps^n.
inline double band_kernel_decay_constant(const BandKernel& K, int k, int samples = 6000)
{
    double best = 0.0;
    for (int i = 0; i <= samples; ++i) {
        const double th = pi * i / samples;
        const double v = std::abs(K(std::cos(th))) * (1.0 + std::pow(th / K.eps, k)) * std::pow(K.eps, K.n);
        best = std::max(best, v);
    }
    return best;
}

inline int frame_jn(int n)
{
    if (n == 1)
        return 0;
    return static_cast<int>(std::floor(std::log2(lambda_of(n))));
}

struct FrameOperatorSpec {
    MaskPair mask;
    int J = 0;
    int jn = 0;
    int n = 2;

    double scale() const { return std::ldexp(1.0, -(J + jn)); }
    double multiplier(int l) const { return mask.b(scale() * (l + lambda_of(n))); }
    // Degrees strictly below this are the only ones B_J can keep.
    int degree_bound() const { return static_cast<int>(std::ceil(std::ldexp(1.0, J + jn + 1) - lambda_of(n))); }
    // Every l with l + lambda <= 2^{J+jn} is reproduced.
    int reproduced_degree() const { return static_cast<int>(std::floor(std::ldexp(1.0, J + jn) - lambda_of(n))); }
};

inline FrameOperatorSpec make_frame_spec(int n, int J, int k = 6)
{
    require(J >= 0, "frame spec: J must be non-negative");
    return FrameOperatorSpec{build_mask(k), J, frame_jn(n), n};
}

inline PolynomialOnSphere apply_B_J(const FrameOperatorSpec& spec, const PolynomialOnSphere& S)
{
    require(spec.n == S.n, "apply_B_J: dimension mismatch");
    PolynomialOnSphere r = S;
    for (long i = 0; i < r.coeffs.size(); ++i)
        r.coeffs(i) *= spec.multiplier(harmonic_degree(S.n, i));
    int top = 0;
    for (long i = 0; i < r.coeffs.size(); ++i)
        if (r.coeffs(i) != 0.0)
            top = std::max(top, harmonic_degree(S.n, i));
    PolynomialOnSphere t = PolynomialOnSphere::zero(S.n, top);
    t.coeffs = r.coeffs.head(harmonic_count(S.n, top));
    return t;
}

// B_J applied to zonal coefficients.
inline std::vector<double> apply_B_J(const FrameOperatorSpec& spec, const std::vector<double>& c)
{
    std::vector<double> r;
    for (int l = 0; l < static_cast<int>(c.size()); ++l) {
        const double m = spec.multiplier(l);
        if (m == 0.0 && spec.scale() * (l + lambda_of(spec.n)) >= 2.0)
            break;
        r.push_back(c[l] * m);
    }
    return r;
}

inline ZonalKernel apply_B_J(const FrameOperatorSpec& spec, const ZonalKernel& k)
{
    ZonalKernel r = make_custom(k.n, apply_B_J(spec, k.coeffs));
    r.params = k.params;
    return r;
}

// ||(I - B_J) L^gamma phi||_p from the stored coefficients.
inline double frame_error_bound(const ZonalKernel& k, const FrameOperatorSpec& spec, double gamma, double p)
{
    const double pprime = p == 1.0 ? inf : (std::isinf(p) ? 1.0 : p / (p - 1.0));
    const double np = std::isinf(pprime) ? 0.0 : k.n / pprime;
    if (k.family == Family::Green)
        require(k.param("beta") - gamma - np > 0.0, "frame_error_bound: need beta - gamma - n/p' > 0");
    if (k.tail_model == TailModel::Algebraic && k.decay_exponent - gamma - np <= 0.0)
        fail(ErrorCode::DivergentSeries, "transformed kernel is not in L^p");
    const ZonalKernel t = lp_kernel_transform(k, gamma);
    std::vector<double> c(t.coeffs.size());
    for (int l = 0; l <= t.lmax(); ++l)
        c[l] = (1.0 - spec.multiplier(l)) * t.coeffs[l];
    return zonal_lp_norm(c, k.n, p);
}

// max over draws of ||L^gamma S||_p / ||S||_p for random S in Pi_L.
inline double poly_bernstein_ratio(int n, double p, double gamma, int L, int draws, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    double best = 0.0;
    for (int d = 0; d < draws; ++d) {
        const PolynomialOnSphere S = random_polynomial(n, L, rng);
        const double r = poly_lp_norm(apply_L_gamma(S, gamma), p) / poly_lp_norm(S, p);
        best = std::max(best, r);
    }
    return best;
}

inline double poly_nikolskii_ratio(int n, int L, int draws, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    double best = 0.0;
    for (int d = 0; d < draws; ++d) {
        const PolynomialOnSphere S = random_polynomial(n, L, rng);
        best = std::max(best, poly_lp_norm(S, inf) / poly_lp_norm(S, 2.0));
    }
    return best;
}

} // namespace sbf
