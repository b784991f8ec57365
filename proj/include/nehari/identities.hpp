#pragma once

// Nehari and Pohozaev identities on coefficient tuples, and the certificate
// that rules out nonzero solutions when q = 2*(s2).

#include <algorithm>
#include <cmath>
#include <optional>

#include "nehari/fiber_algebra.hpp"
#include "nehari/params.hpp"

namespace nehari {

inline constexpr double identity_floor = 1e-300;

struct IdentityReport {
    double nehari = 0.0;
    double pohozaev = 0.0;
    std::optional<double> certificate; // critical regime only
    double certificate_coeff = 0.0;
};

/// Signed Pohozaev defect (N-2)/2 D + N/2 Mms + λ(N-s1)/p B - (N-s2)/q C.
inline double pohozaev_defect(const FiberCoeffs& c, const Params& params) noexcept
{
    const double N = params.N;
    return 0.5 * (N - 2.0) * c.D + 0.5 * N * c.Mms +
           params.lambda * (N - params.s1) / params.p * c.B - (N - params.s2) / params.q * c.C;
}

inline double nehari_residual(const FiberCoeffs& c, const Params& params) noexcept
{
    return std::abs(phi(c, params)) / std::max(c.A(), identity_floor);
}

inline double pohozaev_residual(const FiberCoeffs& c, const Params& params) noexcept
{
    return std::abs(pohozaev_defect(c, params)) / std::max(c.A(), identity_floor);
}

/// (N-s1)/p - (N-2)/2, nonnegative whenever p <= 2*(s1).
inline double certificate_coeff(const Params& params) noexcept
{
    const double N = params.N;
    const double value = (N - params.s1) / params.p - 0.5 * (N - 2.0);
    // p == 2*(s1) up to rounding of the exponent itself
    if (value < 0.0 && value > -1e-14) return 0.0;
    return value;
}

/// Mms + ((N-s1)/p - (N-2)/2) λB. Vanishes on any solution in the critical
/// regime, yet is at least Mms for every field.
inline double nonexistence_certificate(const FiberCoeffs& c, const Params& params)
{
    if (classify(params).tag != RegimeTag::Critical)
        throw Error(ErrorKind::RegimeMismatch, "nonexistence_certificate requires q = 2*(s2)");
    return c.Mms + certificate_coeff(params) * params.lambda * c.B;
}

/// Constants (k1, k2) with certificate = Pohozaev defect - k1 · Nehari defect
/// (and k2 = 1), so Mms/A <= k1·nehari_residual + k2·pohozaev_residual.
struct EliminationConstants {
    double k1 = 0.0;
    double k2 = 1.0;
};

inline EliminationConstants elimination_constants(const Params& params) noexcept
{
    return {0.5 * (params.N - 2.0), 1.0};
}

inline IdentityReport identity_report(const FiberCoeffs& c, const Params& params)
{
    IdentityReport report;
    report.nehari = nehari_residual(c, params);
    report.pohozaev = pohozaev_residual(c, params);
    report.certificate_coeff = certificate_coeff(params);
    if (is_critical(params)) report.certificate = nonexistence_certificate(c, params);
    return report;
}

} // namespace nehari
