#pragma once

// Exact Nehari fibering algebra on the four scalar integrals of a trial
// function. Everything here is discretization-free: amplitude scaling t*u and
// dilation u(x/r) act on the integrals by explicit powers, so fiber roots,
// the M0 construction and the on-manifold identities are computed exactly.

#include <algorithm>
#include <cmath>
#include <limits>

#include "nehari/error.hpp"
#include "nehari/params.hpp"

namespace nehari {

/// The integrals (∫|∇u|², ∫u², ∫|x|^{-s1}|u|^p, ∫|x|^{-s2}|u|^q) of a trial u.
struct FiberCoeffs {
    double D = 0.0;
    double Mms = 0.0;
    double B = 0.0;
    double C = 0.0;

    /// Squared H¹ norm.
    double A() const noexcept { return D + Mms; }
    bool is_zero() const noexcept { return D == 0.0 && Mms == 0.0 && B == 0.0 && C == 0.0; }

    friend bool operator==(const FiberCoeffs&, const FiberCoeffs&) = default;
};

struct FiberRoots {
    double t0 = 0.0; // M⁺ branch, in (0, 1)
    double t1 = 0.0; // in (1, ∞)
};

struct M0Point {
    double t0 = 0.0;
    double r0 = 0.0;
    FiberCoeffs coeffs;
    // r0 and t0 leave the double range when e is close to 0; the logs do not
    double log_t0 = 0.0;
    double log_r0 = 0.0;
};

struct ManifoldPrediction {
    double lambdaB_pred = 0.0;
    double C_pred = 0.0;
};

/// Exponents closer than this are rejected by the M0 construction.
inline constexpr double min_exponent_gap = 1e-6;

/// ⟨I'(u), u⟩
inline double phi(const FiberCoeffs& c, const Params& params) noexcept
{
    return c.A() + params.lambda * c.B - c.C;
}

/// ⟨I''(u)u, u⟩
inline double psi(const FiberCoeffs& c, const Params& params) noexcept
{
    return c.A() + (params.p - 1.0) * params.lambda * c.B - (params.q - 1.0) * c.C;
}

inline double energy(const FiberCoeffs& c, const Params& params) noexcept
{
    return 0.5 * c.A() + params.lambda * c.B / params.p - c.C / params.q;
}

/// ⟨ψ'(u), u⟩ = 2A + p(p-1)λB - q(q-1)C.
inline double psi_prime_pairing(const FiberCoeffs& c, const Params& params) noexcept
{
    const double p = params.p, q = params.q;
    return 2.0 * c.A() + p * (p - 1.0) * params.lambda * c.B - q * (q - 1.0) * c.C;
}

/// Coefficients of t*u.
inline FiberCoeffs scale_amplitude(const FiberCoeffs& c, double t, const Params& params)
{
    detail::require(t > 0.0, ErrorKind::InvalidParameter, "scale_amplitude: t must be > 0");
    const double t2 = t * t;
    return {t2 * c.D, t2 * c.Mms, std::pow(t, params.p) * c.B, std::pow(t, params.q) * c.C};
}

/// Coefficients of u(x/r).
inline FiberCoeffs dilate(const FiberCoeffs& c, double r, const Params& params)
{
    detail::require(r > 0.0, ErrorKind::InvalidParameter, "dilate: r must be > 0");
    const double N = params.N;
    return {std::pow(r, N - 2.0) * c.D, std::pow(r, N) * c.Mms, std::pow(r, N - params.s1) * c.B,
            std::pow(r, N - params.s2) * c.C};
}

/// g(t) = t^{-2} φ(t u) = A + λ t^{p-2} B - t^{q-2} C.
inline double fiber_map(const FiberCoeffs& c, const Params& params, double t)
{
    detail::require(t > 0.0, ErrorKind::InvalidParameter, "fiber_map: t must be > 0");
    return c.A() + params.lambda * std::pow(t, params.p - 2.0) * c.B -
           std::pow(t, params.q - 2.0) * c.C;
}

/// (p-2)(x^{q-2} - 1) - (q-2)(x^{p-2} - 1); negative for every x > 1.
inline double h_compare(double x, const Params& params)
{
    detail::require(x > 0.0, ErrorKind::InvalidParameter, "h_compare: x must be > 0");
    const double p = params.p, q = params.q;
    return (p - 2.0) * std::expm1((q - 2.0) * std::log(x)) -
           (q - 2.0) * std::expm1((p - 2.0) * std::log(x));
}

namespace detail {

// Bisection to machine precision; g(positive_end) > 0 > g(negative_end).
template <class F>
double bisect(F&& g, double positive_end, double negative_end)
{
    double a = positive_end, b = negative_end;
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid == a || mid == b) break;
        if (g(mid) > 0.0)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

} // namespace detail

/// Both zeros of the fiber map around t = 1 when φ(u) < 0.
inline FiberRoots fiber_roots(const FiberCoeffs& c, const Params& params)
{
    if (!(phi(c, params) < 0.0))
        throw Error(ErrorKind::NoNegativeFiber, "fiber_roots: phi(u) must be negative");

    const auto g = [&](double t) { return fiber_map(c, params, t); };

    // Coarse log scan over [1e-8, 1e8], ten points per decade.
    constexpr int steps = 80;

    double inner = 1.0, below = 0.0;
    for (int k = 1; k <= steps; ++k) {
        const double t = std::pow(10.0, -0.1 * k);
        if (g(t) > 0.0) {
            below = t;
            break;
        }
        inner = t;
    }
    double outer = 1.0, above = 0.0;
    for (int k = 1; k <= steps; ++k) {
        const double t = std::pow(10.0, 0.1 * k);
        if (g(t) > 0.0) {
            above = t;
            break;
        }
        outer = t;
    }
    if (below == 0.0 || above == 0.0 || !std::isfinite(g(inner)) || !std::isfinite(g(outer)))
        throw Error(ErrorKind::RootBracketFailure, "fiber_roots: no sign change in [1e-8, 1e8]");

    return {detail::bisect(g, below, inner), detail::bisect(g, above, outer)};
}

/// Dilation-orbit construction of a point t0·u_{r0} on M0 from an arbitrary nonzero u.
inline M0Point construct_M0(const FiberCoeffs& c, const Params& params)
{
    const Regime regime = classify(params);
    if (regime.tag != RegimeTag::Existence || !regime.cond21)
        throw Error(ErrorKind::RegimeMismatch, "construct_M0 requires the existence regime with cond21");
    if (params.p - params.q < min_exponent_gap)
        throw Error(ErrorKind::InvalidParameter, "construct_M0: p - q too small");
    if (c.is_zero() || !(c.B > 0.0) || !(c.C > 0.0) || !(c.A() > 0.0))
        throw Error(ErrorKind::InvalidCoefficients, "construct_M0: coefficients must be nonzero");

    // Everything below runs on logarithms in long double: with e near 0, r0 and
    // t0 are far outside the double range while the M0 coefficients are not.
    using ld = long double;
    const ld p = params.p, q = params.q, s1 = params.s1, s2 = params.s2, N = params.N;
    const ld gap = p - q;
    const ld log_D = std::log(static_cast<ld>(c.D)), log_M = std::log(static_cast<ld>(c.Mms));
    const ld log_B = std::log(static_cast<ld>(c.B)), log_C = std::log(static_cast<ld>(c.C));
    const ld log_ratio = std::log((q - 2) * c.C) - std::log(params.lambda * (p - 2) * c.B);
    const ld log_K = std::log(gap / (p - 2)) + log_C + (q - 2) / gap * log_ratio;
    const ld e = 2 - s2 - (q - 2) * (s2 - s1) / gap;

    // g(r) = D + r² Mms - K r^e > 0  <=>  F(x) > 0 with x = log r; F increases since e < 0
    const auto log_add = [](ld a, ld b) {
        if (std::isinf(a) && a < 0) return b;
        if (std::isinf(b) && b < 0) return a;
        return std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
    };
    const auto F = [&](ld x) { return log_add(log_D, 2 * x + log_M) - (log_K + e * x); };

    ld lo = 0, hi = 0;
    if (F(0) < 0) {
        for (ld step = 1; !(F(hi) > 0); step *= 2) {
            lo = hi;
            hi += step;
            if (step > 1e12L) throw Error(ErrorKind::RootBracketFailure, "construct_M0: cannot bracket r0");
        }
    } else {
        for (ld step = 1; !(F(lo) < 0); step *= 2) {
            hi = lo;
            lo -= step;
            if (step > 1e12L) throw Error(ErrorKind::RootBracketFailure, "construct_M0: cannot bracket r0");
        }
    }
    for (int k = 0; k < 200; ++k) {
        const ld mid = 0.5L * (lo + hi);
        if (mid == lo || mid == hi) break;
        (F(mid) < 0 ? lo : hi) = mid;
    }
    const ld x = 0.5L * (lo + hi);
    const ld lt = (log_ratio - (s2 - s1) * x) / gap;

    const auto coeff = [](ld log_value) { return static_cast<double>(std::exp(log_value)); };
    M0Point out;
    out.log_r0 = static_cast<double>(x);
    out.log_t0 = static_cast<double>(lt);
    out.r0 = coeff(x);
    out.t0 = coeff(lt);
    out.coeffs = {coeff(2 * lt + (N - 2) * x + log_D), c.Mms > 0.0 ? coeff(2 * lt + N * x + log_M) : 0.0,
                  coeff(p * lt + (N - s1) * x + log_B), coeff(q * lt + (N - s2) * x + log_C)};
    const FiberCoeffs& m = out.coeffs;
    // Mms may underflow next to D; the other three must be normal doubles
    const auto normal = [](double v) { return std::isnormal(v) && v > 0.0; };
    if (!normal(m.D) || !normal(m.B) || !normal(m.C) || !std::isfinite(m.Mms))
        throw Error(ErrorKind::NumericalFailure, "construct_M0: M0 coefficients out of double range");
    return out;
}

/// Residual tolerance (relative to A) for accepting a point as lying on M0.
inline constexpr double m0_membership_tol = 1e-9;

/// h'(1) = 2 Mms + (2-s1)λB - (2-s2)C at an M0 point; positive when cond21 holds.
inline double m0_perturbation_sign(const M0Point& m0, const Params& params)
{
    const FiberCoeffs& c = m0.coeffs;
    const double A = c.A();
    if (!(A > 0.0) || std::abs(phi(c, params)) > m0_membership_tol * A ||
        std::abs(psi(c, params)) > m0_membership_tol * A)
        throw Error(ErrorKind::NotOnM0, "m0_perturbation_sign: point is not on M0");
    return 2.0 * c.Mms + (2.0 - params.s1) * params.lambda * c.B - (2.0 - params.s2) * c.C;
}

/// λB and C predicted from A and ψ, valid on the Nehari manifold.
inline ManifoldPrediction on_manifold_identities(const FiberCoeffs& c, const Params& params)
{
    const double A = c.A();
    if (!(A > 0.0) || std::abs(phi(c, params)) > 1e-10 * A)
        throw Error(ErrorKind::NotOnM, "on_manifold_identities: phi residual too large");
    const double gap = params.p - params.q;
    const double s = psi(c, params);
    return {((params.q - 2.0) * A + s) / gap, ((params.p - 2.0) * A + s) / gap};
}

/// ((p-2)(q-2)/(2pq)) A - ψ/(pq); equals the energy on M.
inline double energy_on_manifold(const FiberCoeffs& c, const Params& params) noexcept
{
    const double p = params.p, q = params.q;
    return (p - 2.0) * (q - 2.0) / (2.0 * p * q) * c.A() - psi(c, params) / (p * q);
}

} // namespace nehari
