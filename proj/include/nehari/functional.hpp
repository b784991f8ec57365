#pragma once

// The energy I, the Nehari constraint φ(u) = ⟨I'(u),u⟩ and ψ(u) = ⟨I''(u)u,u⟩
// on discrete radial fields, with H¹ Riesz gradients. The nonlinear terms are
// sampled at the same Gauss points as the quadrature tables, so the discrete
// gradients are the exact gradients of the discrete energy.

#include <cmath>
#include <vector>

#include "nehari/error.hpp"
#include "nehari/fiber_algebra.hpp"
#include "nehari/params.hpp"
#include "nehari/radial_grid.hpp"

namespace nehari {

struct FunctionalEval {
    FiberCoeffs coeffs;
    double I = 0.0;
    double phi = 0.0;
    double psi = 0.0;
};

struct ProjectedResidual {
    double mu = 0.0;
    double residual = 0.0;
    double grad_phi_norm = 0.0;
};

/// ‖grad_phi‖² below this is treated as a vanishing constraint gradient.
inline constexpr double degenerate_constraint_tol = 1e-24;

namespace detail {

inline void check_compatible(const RadialGrid& grid, const Params& params)
{
    if (grid.N() != params.N || grid.s1() != params.s1 || grid.s2() != params.s2)
        throw Error(ErrorKind::GridMismatch, "grid was built for different N, s1, s2");
}

// load_i = Σ_cells Σ_gauss w |u|^{power-2} u φ_i for the given weight
inline void add_power_load(const RadialField& u, double power, Weight weight, double scale,
                           std::vector<double>& load)
{
    const RadialGrid& grid = u.grid();
    const auto v = u.values();
    for (int i = 0; i < grid.n(); ++i) {
        const auto& w = grid.weights(weight, i);
        for (std::size_t j = 0; j < gauss_points; ++j) {
            const double x = gauss_nodes[j];
            const double uj = gauss_value(v, i, j);
            const double a = std::abs(uj);
            const double f = a == 0.0 ? 0.0 : scale * w[j] * std::pow(a, power - 2.0) * uj;
            load[i] += f * (1.0 - x);
            load[i + 1] += f * x;
        }
    }
}

inline RadialField nonlinear_riesz(const RadialField& u, const Params& params, double coef_p,
                                   double coef_q)
{
    check_compatible(u.grid(), params);
    std::vector<double> load(u.grid().n() + 1, 0.0);
    add_power_load(u, params.p, Weight::S1, coef_p, load);
    add_power_load(u, params.q, Weight::S2, coef_q, load);
    for (double l : load)
        if (!std::isfinite(l)) throw Error(ErrorKind::NumericalFailure, "non-finite gradient load");
    return riesz_solve_load(u.grid_ptr(), load);
}

} // namespace detail

/// (∫|u'|², ∫u², ∫r^{-s1}|u|^p, ∫r^{-s2}|u|^q) against r^{N-1} dr.
inline FiberCoeffs extract_coeffs(const RadialField& u, const Params& params)
{
    detail::check_compatible(u.grid(), params);
    const FiberCoeffs c{dirichlet_energy(u), weighted_integral(u, 2.0, Weight::Zero),
                        weighted_integral(u, params.p, Weight::S1),
                        weighted_integral(u, params.q, Weight::S2)};
    if (!std::isfinite(c.D) || !std::isfinite(c.Mms) || !std::isfinite(c.B) || !std::isfinite(c.C))
        throw Error(ErrorKind::NumericalFailure, "extract_coeffs: non-finite integral");
    return c;
}

inline FunctionalEval evaluate(const RadialField& u, const Params& params)
{
    const FiberCoeffs c = extract_coeffs(u, params);
    return {c, energy(c, params), phi(c, params), psi(c, params)};
}

/// Riesz representative of I'(u).
inline RadialField grad_I(const RadialField& u, const Params& params)
{
    RadialField g = detail::nonlinear_riesz(u, params, params.lambda, -1.0);
    return g.axpy(1.0, u);
}

/// Riesz representative of φ'(u) = 2(u,·) + pλ∫r^{-s1}|u|^{p-2}u· - q∫r^{-s2}|u|^{q-2}u·.
inline RadialField grad_phi(const RadialField& u, const Params& params)
{
    RadialField g = detail::nonlinear_riesz(u, params, params.p * params.lambda, -params.q);
    return g.axpy(2.0, u);
}

/// min over μ of ‖I'(u) - μ φ'(u)‖ in H¹, from precomputed gradients.
inline ProjectedResidual projected_residual(const RadialField& gI, const RadialField& gphi)
{
    const double nphi = h1_inner(gphi, gphi);
    if (!(nphi > degenerate_constraint_tol))
        throw Error(ErrorKind::DegenerateConstraint, "projected_residual: grad_phi vanishes");
    const double cross = h1_inner(gI, gphi);
    const double mu = cross / nphi;
    // ‖gI - μ gphi‖² computed directly, not by the cancelling formula.
    RadialField r = gI;
    r.axpy(-mu, gphi);
    return {mu, h1_norm(r), std::sqrt(nphi)};
}

inline ProjectedResidual projected_residual(const RadialField& u, const Params& params)
{
    return projected_residual(grad_I(u, params), grad_phi(u, params));
}

} // namespace nehari
