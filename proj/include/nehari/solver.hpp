#pragma once

// Local minimization of I on the M⁺ branch of the Nehari manifold.
//
// Start: Gaussian seed → M0 point by the dilation construction → slight
// contraction so that φ < 0 → smaller fiber root (an M⁺ point) → further
// contraction to the lowest M⁺ energy on that dilation orbit.
// Iteration: H¹ projected-gradient step d = -(∇I - μ∇φ), clamp to the
// nonnegative cone, rescale onto the smaller fiber root, Armijo acceptance.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nehari/error.hpp"
#include "nehari/fiber_algebra.hpp"
#include "nehari/functional.hpp"
#include "nehari/identities.hpp"
#include "nehari/params.hpp"
#include "nehari/radial_grid.hpp"

namespace nehari {

struct SolverConfig {
    double tol = 1e-6;
    int max_iter = 5000;
    double armijo_c = 1e-4;
    double step0 = 1.0;
    double seed_width = 1.0;
    double dilation_backoff = 0.99;

    void validate() const
    {
        using detail::require;
        constexpr auto bad = ErrorKind::InvalidParameter;
        require(tol > 0.0, bad, "solver.tol must be > 0");
        require(armijo_c > 0.0 && armijo_c < 1.0, bad, "solver.armijo_c must lie in (0, 1)");
        require(max_iter >= 1, bad, "solver.max_iter must be >= 1");
        require(step0 > 0.0, bad, "solver.step0 must be > 0");
        require(seed_width > 0.0, bad, "solver.seed_width must be > 0");
        require(dilation_backoff > 0.0 && dilation_backoff < 1.0, bad,
                "solver.dilation_backoff must lie in (0, 1)");
    }
};

/// Line-search constants.
inline constexpr double backtrack_factor = 0.5;
inline constexpr int max_halvings = 30;

struct TraceRow {
    int iter = 0;
    double I = 0.0;
    double phi = 0.0;
    double psi = 0.0;
    double residual = 0.0;
};

enum class SolveStatus { Converged, IterationCap, BranchLoss, Stagnation, Stopped };

constexpr std::string_view to_string(SolveStatus s) noexcept
{
    switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::IterationCap: return "IterationCap";
    case SolveStatus::BranchLoss: return "BranchLoss";
    case SolveStatus::Stagnation: return "Stagnation";
    case SolveStatus::Stopped: return "Stopped";
    }
    return "Unknown";
}

struct SolveReport {
    explicit SolveReport(RadialField u) : solution(std::move(u)) {}

    RadialField solution;
    SolveStatus status = SolveStatus::IterationCap;
    FiberCoeffs coeffs;
    double m_plus = 0.0;
    double residual = 0.0;
    double mu = 0.0;
    double grad_phi_norm = 0.0;
    double nehari_residual = 0.0;
    double pohozaev_residual = 0.0;
    double psi_value = 0.0;
    int iterations = 0;
    double positivity = 0.0;
    int last_clamp_iter = -1; // last accepted step where the cone clamp was active
    IdentityReport identities;
    std::vector<TraceRow> trace;

    bool converged() const noexcept { return status == SolveStatus::Converged; }
};

/// A solve that stopped without meeting the tolerance; the diagnostics survive.
class SolveFailure : public Error {
public:
    SolveFailure(ErrorKind kind, const std::string& what, SolveReport report)
        : Error(kind, what), report_(std::move(report))
    {
    }
    const SolveReport& report() const noexcept { return report_; }

private:
    SolveReport report_;
};

/// Amplitude that carries u onto the smaller fiber root, if the fiber map
/// has a negative region. The root lies left of the minimizer of g.
inline std::optional<double> mplus_scaling(const FiberCoeffs& c, const Params& params)
{
    if (!(c.B > 0.0) || !(c.C > 0.0) || !(c.A() > 0.0)) return std::nullopt;
    const double p = params.p, q = params.q;
    const double t_min =
        std::exp((std::log((q - 2.0) * c.C) - std::log((p - 2.0) * params.lambda * c.B)) / (p - q));
    if (!std::isfinite(t_min) || !(fiber_map(c, params, t_min) < 0.0)) return std::nullopt;
    try {
        const FiberRoots roots = fiber_roots(scale_amplitude(c, t_min, params), params);
        return t_min * roots.t0;
    } catch (const Error& e) {
        // g(t_min) < 0 by a rounding margin only
        if (e.kind() == ErrorKind::RootBracketFailure || e.kind() == ErrorKind::NoNegativeFiber)
            return std::nullopt;
        throw;
    }
}

inline RadialField gaussian_seed(const GridPtr& grid, double width)
{
    const double inv = 1.0 / (2.0 * width * width);
    return RadialField::sample(grid, [inv](double r) { return std::exp(-r * r * inv); });
}

/// Energy of the M⁺ point on the amplitude fiber of u(x/r), or nullopt when
/// that fiber has no negative region.
inline std::optional<double> orbit_energy(const FiberCoeffs& c, const Params& params, double r)
{
    const FiberCoeffs cr = dilate(c, r, params);
    const std::optional<double> t = mplus_scaling(cr, params);
    if (!t) return std::nullopt;
    return energy(scale_amplitude(cr, *t, params), params);
}

/// Dilation r in (0, r_max] minimizing the M⁺ energy along the dilation
/// orbit of c. Requires the fiber at r_max to have a negative region.
inline double orbit_minimizer(const FiberCoeffs& c, const Params& params, double r_max)
{
    if (!orbit_energy(c, params, r_max))
        throw Error(ErrorKind::InitializationFailure, "orbit_minimizer: no M+ point at r_max");

    // Log scan down to r_max * 2^-40, then golden section around the best sample.
    constexpr int per_octave = 8;
    constexpr int samples = 40 * per_octave;
    const double step = std::log(2.0) / per_octave;
    int best = 0;
    double best_energy = *orbit_energy(c, params, r_max);
    for (int k = 1; k <= samples; ++k) {
        const auto e = orbit_energy(c, params, r_max * std::exp(-step * k));
        if (!e) break;
        if (*e < best_energy) {
            best_energy = *e;
            best = k;
        }
    }
    double lo = std::log(r_max) - step * std::min(best + 1, samples);
    double hi = std::log(r_max) - step * std::max(best - 1, 0);
    const auto f = [&](double log_r) {
        const auto e = orbit_energy(c, params, std::exp(log_r));
        return e ? *e : std::numeric_limits<double>::infinity();
    };
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = f(x2);
        }
    }
    const double r = std::exp(0.5 * (lo + hi));
    return orbit_energy(c, params, r) ? r : std::exp(std::log(r_max) - step * best);
}

/// M⁺ starting point: the M0 point of a Gaussian seed, contracted into M⁺
/// and then further along its dilation orbit to the lowest M⁺ energy.
inline RadialField initialize_Mplus(const Params& params, const GridPtr& grid, const SolverConfig& cfg)
{
    const Regime regime = classify(params);
    if (regime.tag != RegimeTag::Existence || !regime.cond21)
        throw Error(ErrorKind::RegimeMismatch, "initialize_Mplus requires the existence regime with cond21");
    cfg.validate();

    const RadialField seed = gaussian_seed(grid, cfg.seed_width);
    const FiberCoeffs seed_coeffs = extract_coeffs(seed, params);
    M0Point m0;
    try {
        m0 = construct_M0(seed_coeffs, params);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NumericalFailure && e.kind() != ErrorKind::RootBracketFailure) throw;
        throw Error(ErrorKind::InitializationFailure, std::string("initialize_Mplus: ") + e.what());
    }
    if (!(m0.r0 > 0.0) || !std::isfinite(m0.r0) || !std::isfinite(m0.t0))
        throw Error(ErrorKind::InitializationFailure, "initialize_Mplus: M0 dilation out of range");

    std::vector<double> backoffs{cfg.dilation_backoff, 0.999, 0.99, 0.9, 0.8};
    for (double rb : backoffs) {
        // Contraction is checked on the coefficients; the contracted field itself
        // can be far below grid resolution near the cond21 boundary.
        const FiberCoeffs contracted = scale_amplitude(dilate(seed_coeffs, m0.r0 * rb, params), m0.t0, params);
        if (!(phi(contracted, params) < 0.0)) continue;

        // The contracted point is in M⁺; slide along the orbit to its energy minimum.
        const double r_best = orbit_minimizer(seed_coeffs, params, m0.r0 * rb);
        RadialField w = dilate_field(seed, r_best);
        const std::optional<double> t = mplus_scaling(extract_coeffs(w, params), params);
        if (!t) continue;
        w *= *t;
        const FunctionalEval eval = evaluate(w, params);
        if (eval.psi < 0.0 && std::abs(eval.phi) <= 1e-8 * eval.coeffs.A()) return w;
    }
    throw Error(ErrorKind::InitializationFailure, "initialize_Mplus: could not reach phi < 0 by contraction");
}

/// M⁺ starting point by scanning Gaussian widths and amplitudes until the
/// fiber map turns negative. Used where the M0 construction is unavailable.
inline RadialField initialize_by_amplitude_scan(const Params& params, const GridPtr& grid,
                                                const SolverConfig& cfg)
{
    validate(params);
    cfg.validate();
    for (int k = 0; k <= 24; ++k) {
        // widths w, w/2, 2w, w/4, 4w, ...
        const int e = (k % 2 == 1) ? -(k + 1) / 2 : k / 2;
        const double width = cfg.seed_width * std::ldexp(1.0, e);
        if (width * 4.0 > grid->R()) continue;
        const RadialField seed = gaussian_seed(grid, width);
        const FiberCoeffs c = extract_coeffs(seed, params);
        for (int j = -80; j <= 80; ++j) {
            const double amp = std::pow(10.0, 0.05 * j);
            if (!(fiber_map(c, params, amp) < 0.0)) continue;
            const FiberCoeffs scaled = scale_amplitude(c, amp, params);
            const FiberRoots roots = fiber_roots(scaled, params);
            RadialField v = seed;
            v *= amp * roots.t0;
            if (evaluate(v, params).psi < 0.0) return v;
        }
    }
    throw Error(ErrorKind::InitializationFailure, "amplitude scan found no negative fiber");
}

namespace detail {

struct NoStop {
    bool operator()(int, const RadialField&, const FunctionalEval&) const noexcept { return false; }
};

inline double interior_minimum(const RadialField& u)
{
    const auto v = u.values();
    return *std::min_element(v.begin(), v.end() - 1);
}

inline void finalize(SolveReport& report, const Params& params, const FunctionalEval& eval,
                     const ProjectedResidual& pr)
{
    report.coeffs = eval.coeffs;
    report.m_plus = eval.I;
    report.residual = pr.residual;
    report.mu = pr.mu;
    report.grad_phi_norm = pr.grad_phi_norm;
    report.psi_value = eval.psi;
    report.nehari_residual = nehari_residual(eval.coeffs, params);
    report.pohozaev_residual = pohozaev_residual(eval.coeffs, params);
    report.identities = identity_report(eval.coeffs, params);
    report.positivity = interior_minimum(report.solution);
}

} // namespace detail

/// Projected descent on M⁺. Never throws on non-convergence; the status field
/// says how the run ended. `stop(iter, u, eval)` may end the run early.
template <class Stop = detail::NoStop>
SolveReport descend_on_Mplus(RadialField start, const Params& params, const SolverConfig& cfg,
                             Stop&& stop = Stop{})
{
    cfg.validate();
    RadialField u = std::move(start);
    FunctionalEval eval = evaluate(u, params);
    if (!(eval.psi < 0.0) || std::abs(eval.phi) > 1e-8 * eval.coeffs.A())
        throw Error(ErrorKind::InvalidParameter, "descent must start on M+");

    SolveReport report(u);
    ProjectedResidual pr;
    const int n = u.grid().n();

    for (int iter = 0;; ++iter) {
        const RadialField gI = grad_I(u, params);
        const RadialField gphi = grad_phi(u, params);
        pr = projected_residual(gI, gphi);
        report.trace.push_back({iter, eval.I, eval.phi, eval.psi, pr.residual});
        report.iterations = iter;

        if (stop(iter, u, eval)) {
            report.status = SolveStatus::Stopped;
            break;
        }
        if (pr.residual <= cfg.tol) {
            report.status = SolveStatus::Converged;
            break;
        }
        if (iter >= cfg.max_iter) {
            report.status = SolveStatus::IterationCap;
            break;
        }

        RadialField d = gI;
        d.axpy(-pr.mu, gphi);
        d *= -1.0;
        const double slope = pr.residual * pr.residual;

        bool accepted = false, branch_seen = false;
        double tau = cfg.step0;
        for (int halving = 0; halving <= max_halvings; ++halving, tau *= backtrack_factor) {
            RadialField trial = u;
            trial.axpy(tau, d);
            bool clamped = false;
            auto tv = trial.values();
            for (int i = 0; i < n; ++i) {
                if (tv[i] < 0.0) {
                    tv[i] = 0.0;
                    clamped = true;
                }
            }
            const FiberCoeffs ct = extract_coeffs(trial, params);
            const std::optional<double> scale = mplus_scaling(ct, params);
            if (!scale) continue;
            branch_seen = true;
            const FiberCoeffs cn = scale_amplitude(ct, *scale, params);
            if (!(energy(cn, params) <= eval.I - cfg.armijo_c * tau * slope)) continue;

            trial *= *scale;
            const FunctionalEval next = evaluate(trial, params);
            if (!(next.psi < 0.0)) {
                report.status = SolveStatus::BranchLoss;
                break;
            }
            u = std::move(trial);
            eval = next;
            if (clamped) report.last_clamp_iter = iter + 1;
            accepted = true;
            break;
        }
        if (report.status == SolveStatus::BranchLoss) break;
        if (!accepted) {
            report.status = branch_seen ? SolveStatus::Stagnation : SolveStatus::BranchLoss;
            break;
        }
    }

    report.solution = std::move(u);
    detail::finalize(report, params, eval, pr);
    return report;
}

namespace detail {

inline SolveReport converged_or_throw(SolveReport report)
{
    switch (report.status) {
    case SolveStatus::Converged: return report;
    case SolveStatus::BranchLoss:
        throw SolveFailure(ErrorKind::BranchLossFailure, "left the M+ branch", std::move(report));
    default:
        throw SolveFailure(ErrorKind::ConvergenceFailure,
                           "stopped with status " + std::string(to_string(report.status)),
                           std::move(report));
    }
}

} // namespace detail

/// Minimizes I on M⁺ from an M⁺ starting field; throws SolveFailure unless
/// the projected residual reaches cfg.tol.
inline SolveReport minimize_on_Mplus(RadialField start, const Params& params, const SolverConfig& cfg)
{
    return detail::converged_or_throw(descend_on_Mplus(std::move(start), params, cfg));
}

enum class StartKind { M0Orbit, AmplitudeScan };

constexpr std::string_view to_string(StartKind k) noexcept
{
    return k == StartKind::M0Orbit ? "m0_orbit" : "amplitude_scan";
}

struct StartedReport {
    SolveReport report;
    StartKind start;
};

/// Descent from the M0-orbit start. Close to the cond21 boundary the Gaussian
/// orbit only meets M⁺ next to M0 and the descent runs into M0; then the
/// descent is repeated from the amplitude-scan start.
inline StartedReport descend_with_fallback(const Params& params, const GridPtr& grid, const SolverConfig& cfg)
{
    std::optional<SolveReport> first;
    try {
        first = descend_on_Mplus(initialize_Mplus(params, grid, cfg), params, cfg);
        if (first->status != SolveStatus::BranchLoss) return {std::move(*first), StartKind::M0Orbit};
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::InitializationFailure) throw;
    }
    try {
        return {descend_on_Mplus(initialize_by_amplitude_scan(params, grid, cfg), params, cfg),
                StartKind::AmplitudeScan};
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::InitializationFailure || !first) throw;
        return {std::move(*first), StartKind::M0Orbit};
    }
}

struct GridSetting {
    int n = 1024;
    double R = 20.0;
    double gamma = 2.0;
};

inline SolveReport solve(const Params& params, const GridSetting& grid_setting, const SolverConfig& cfg)
{
    const GridPtr grid = build_grid(grid_setting.n, grid_setting.R, grid_setting.gamma, params.N,
                                    params.s1, params.s2);
    return detail::converged_or_throw(descend_with_fallback(params, grid, cfg).report);
}

struct RefineEntry {
    GridSetting grid;
    std::optional<SolveReport> report;
    std::string error;
    double rel_change = 0.0; // |Δm⁺|/m⁺ against the previous converged entry
};

inline std::vector<RefineEntry> refine_study(const Params& params, const SolverConfig& cfg,
                                             const std::vector<GridSetting>& grids)
{
    detail::require(grids.size() >= 2, ErrorKind::InvalidParameter, "refine_study needs >= 2 grids");
    std::vector<RefineEntry> out;
    const SolveReport* previous = nullptr;
    for (const GridSetting& g : grids) {
        RefineEntry entry{g, std::nullopt, {}, 0.0};
        try {
            entry.report = solve(params, g, cfg);
        } catch (const Error& e) {
            entry.error = e.what();
        }
        out.push_back(std::move(entry));
    }
    for (RefineEntry& entry : out) {
        if (!entry.report) continue;
        if (previous)
            entry.rel_change = std::abs(entry.report->m_plus - previous->m_plus) / previous->m_plus;
        previous = &*entry.report;
    }
    return out;
}

} // namespace nehari
