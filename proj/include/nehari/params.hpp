#pragma once

#include <cmath>
#include <string_view>

#include "nehari/error.hpp"

namespace nehari {

/// Problem tuple for  -Δu + u = -λ|x|^{-s1}|u|^{p-2}u + |x|^{-s2}|u|^{q-2}u  on R^N.
struct Params {
    int N = 3;
    double lambda = 1.0;
    double s1 = 0.0;
    double s2 = 1.0;
    double p = 5.0;
    double q = 3.8;
};

enum class RegimeTag { Existence, Critical };

constexpr std::string_view to_string(RegimeTag tag) noexcept
{
    return tag == RegimeTag::Existence ? "Existence" : "Critical";
}

struct Regime {
    RegimeTag tag = RegimeTag::Existence;
    bool cond21 = false; // only meaningful for Existence
};

/// Absolute tolerance of the equality test q == 2*(s2). All other regime
/// boundaries are strict floating-point comparisons.
inline constexpr double critical_equality_tol = 1e-12;

/// Hardy-Sobolev critical exponent 2(N-s)/(N-2).
inline double critical_exponent(int N, double s)
{
    detail::require(N >= 3, ErrorKind::InvalidParameter, "critical_exponent: N must be >= 3");
    detail::require(s >= 0.0 && s <= 2.0, ErrorKind::InvalidParameter,
                    "critical_exponent: s must lie in [0, 2]");
    return 2.0 * (N - s) / (N - 2);
}

/// q(2 - s1) > (2 - s2)p + 2(s2 - s1), evaluated strictly.
inline bool condition21(double s1, double s2, double p, double q)
{
    return q > ((2.0 - s2) * p + 2.0 * (s2 - s1)) / (2.0 - s1);
}

/// Checks the structural invariants shared by both regimes.
inline void validate(const Params& params)
{
    using detail::require;
    constexpr auto bad = ErrorKind::InvalidParameter;
    require(params.N >= 3, bad, "N must be >= 3");
    require(std::isfinite(params.lambda) && params.lambda > 0.0, bad, "lambda must be > 0");
    require(std::isfinite(params.s1) && std::isfinite(params.s2), bad, "s1, s2 must be finite");
    require(params.s1 >= 0.0 && params.s1 < params.s2 && params.s2 < 2.0, bad,
            "weights must satisfy 0 <= s1 < s2 < 2");
    require(std::isfinite(params.p) && std::isfinite(params.q), bad, "p, q must be finite");
    require(params.q > 2.0 && params.p > params.q, bad, "exponents must satisfy 2 < q < p");
}

inline bool is_critical(const Params& params)
{
    return std::abs(params.q - critical_exponent(params.N, params.s2)) <= critical_equality_tol;
}

inline Regime classify(const Params& params)
{
    validate(params);
    const double crit1 = critical_exponent(params.N, params.s1);
    const double crit2 = critical_exponent(params.N, params.s2);

    if (is_critical(params)) {
        if (params.p <= crit1) return {RegimeTag::Critical, false};
        throw Error(ErrorKind::UnsupportedRegime, "critical q requires p <= 2*(s1)");
    }
    if (params.q < crit2 && params.p < crit1)
        return {RegimeTag::Existence, condition21(params.s1, params.s2, params.p, params.q)};
    throw Error(ErrorKind::UnsupportedRegime,
                "exponents satisfy neither p < 2*(s1), q < 2*(s2) nor q = 2*(s2) < p <= 2*(s1)");
}

/// (2-s1)(q-2) > (2-s2)(p-2); undefined for the critical regime.
inline bool condition21(const Params& params)
{
    if (is_critical(params))
        throw Error(ErrorKind::RegimeMismatch, "condition21 is not defined for q = 2*(s2)");
    return condition21(params.s1, params.s2, params.p, params.q);
}

} // namespace nehari
