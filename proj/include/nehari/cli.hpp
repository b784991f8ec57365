#pragma once

// Subcommands behind the `nehari` executable. Each returns a process exit code:
// 0 ok, 1 internal failure, 2 bad config or regime, 3 no convergence,
// 4 no starting point / no negative fiber.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "nehari/config.hpp"
#include "nehari/error.hpp"
#include "nehari/fiber_algebra.hpp"
#include "nehari/functional.hpp"
#include "nehari/identities.hpp"
#include "nehari/io.hpp"
#include "nehari/nonexistence.hpp"
#include "nehari/params.hpp"
#include "nehari/radial_grid.hpp"
#include "nehari/rng.hpp"
#include "nehari/solver.hpp"

namespace nehari::cli {

enum ExitCode : int { Ok = 0, Internal = 1, BadInput = 2, NoConvergence = 3, NoStart = 4 };

struct Options {
    std::string config_path;
    std::optional<std::filesystem::path> out_dir; // --out; falls back to config, then ./out
    bool override_regime = false;
    std::optional<std::string> coeffs;
};

inline int exit_code(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidParameter:
    case ErrorKind::RegimeMismatch:
    case ErrorKind::UnsupportedRegime:
    case ErrorKind::InvalidCoefficients: return BadInput;
    case ErrorKind::ConvergenceFailure:
    case ErrorKind::BranchLossFailure: return NoConvergence;
    case ErrorKind::InitializationFailure:
    case ErrorKind::NoNegativeFiber: return NoStart;
    default: return Internal;
    }
}

namespace detail {

/// Runs body, turning exceptions into exit codes and a one-line message.
inline int guarded(const char* name, std::ostream& err, const std::function<int()>& body)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        err << name << ": invalid config: " << e.what() << "\n";
        return BadInput;
    } catch (const Error& e) {
        err << name << ": " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << name << ": internal error: " << e.what() << "\n";
        return Internal;
    }
}

inline std::filesystem::path output_dir(const Options& opt, const RunConfig& cfg)
{
    std::filesystem::path dir = opt.out_dir ? *opt.out_dir : std::filesystem::path(cfg.outputs.value_or("out"));
    std::filesystem::create_directories(dir);
    return dir;
}

inline GridPtr make_grid(const RunConfig& cfg)
{
    return build_grid(cfg.grid.n, cfg.grid.R, cfg.grid.gamma, cfg.params.N, cfg.params.s1, cfg.params.s2);
}

/// Override from the flag, then from the config, else a Gaussian seed on the grid.
inline std::pair<FiberCoeffs, std::string> input_coeffs(const Options& opt, const RunConfig& cfg)
{
    if (opt.coeffs) return {parse_coeffs(*opt.coeffs), "override"};
    if (cfg.coeffs) return {*cfg.coeffs, "override"};
    const RadialField seed = gaussian_seed(make_grid(cfg), cfg.solver.seed_width);
    return {extract_coeffs(seed, cfg.params), "gaussian_seed"};
}

inline std::string branch_name(double psi_value)
{
    if (psi_value < 0.0) return "M+";
    if (psi_value > 0.0) return "M-";
    return "M0";
}

inline nlohmann::json regime_json(const Regime& regime)
{
    nlohmann::json j = {{"regime", std::string(to_string(regime.tag))}};
    j["cond21"] = regime.tag == RegimeTag::Existence ? nlohmann::json(regime.cond21) : nlohmann::json(nullptr);
    return j;
}

} // namespace detail

inline int cmd_validate(const Options& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return detail::guarded("validate", err, [&] {
        const RunConfig cfg = load_config(opt.config_path);
        const Params& p = cfg.params;
        const Regime regime = classify(p);
        cfg.solver.validate();
        nlohmann::json j = {{"N", p.N},
                            {"lambda", p.lambda},
                            {"s1", p.s1},
                            {"s2", p.s2},
                            {"p", p.p},
                            {"q", p.q},
                            {"crit_s1", critical_exponent(p.N, p.s1)},
                            {"crit_s2", critical_exponent(p.N, p.s2)}};
        j.update(detail::regime_json(regime));
        out << j.dump(2) << "\n";
        return int(Ok);
    });
}

inline int cmd_fiber(const Options& opt, std::ostream& err = std::cerr)
{
    return detail::guarded("fiber", err, [&] {
        const RunConfig cfg = load_config(opt.config_path);
        const Params& params = cfg.params;
        const Regime regime = classify(params);
        const auto [c, source] = detail::input_coeffs(opt, cfg);
        const FiberRoots roots = fiber_roots(c, params);

        const std::filesystem::path dir = detail::output_dir(opt, cfg);
        constexpr int samples = 400;
        const double lo = std::log(1e-3 * roots.t0), hi = std::log(10.0 * roots.t1);
        std::string csv = "t,g\n";
        for (int k = 0; k < samples; ++k) {
            const double t = std::exp(lo + (hi - lo) * k / (samples - 1));
            csv += format_double(t) + "," + format_double(fiber_map(c, params, t)) + "\n";
        }
        write_text(dir / "fiber.csv", csv);

        const double psi0 = psi(scale_amplitude(c, roots.t0, params), params);
        const double psi1 = psi(scale_amplitude(c, roots.t1, params), params);
        nlohmann::json j = {{"config", to_json(cfg)},
                            {"coeffs_source", source},
                            {"coeffs", to_json(c)},
                            {"phi", phi(c, params)},
                            {"t0", roots.t0},
                            {"t1", roots.t1},
                            {"psi_t0", psi0},
                            {"psi_t1", psi1},
                            {"classification", detail::branch_name(psi0)},
                            {"classification_t1", detail::branch_name(psi1)}};
        j.update(detail::regime_json(regime));
        write_json(dir / "fiber.json", j);
        return int(Ok);
    });
}

inline int cmd_m0(const Options& opt, std::ostream& err = std::cerr)
{
    return detail::guarded("m0", err, [&] {
        const RunConfig cfg = load_config(opt.config_path);
        const Params& params = cfg.params;
        const Regime regime = classify(params);
        const auto [c, source] = detail::input_coeffs(opt, cfg);
        const M0Point m0 = construct_M0(c, params);
        const double A = m0.coeffs.A();

        nlohmann::json j = {{"config", to_json(cfg)},
                            {"coeffs_source", source},
                            {"input_coeffs", to_json(c)},
                            {"t0", m0.t0},
                            {"r0", m0.r0},
                            {"log_t0", m0.log_t0},
                            {"log_r0", m0.log_r0},
                            {"coeffs", to_json(m0.coeffs)},
                            {"phi_rel", phi(m0.coeffs, params) / A},
                            {"psi_rel", psi(m0.coeffs, params) / A},
                            {"perturbation_sign", m0_perturbation_sign(m0, params)},
                            {"psi_prime_pairing", psi_prime_pairing(m0.coeffs, params)},
                            {"pairing_expected", (params.p - 2.0) * (params.q - 2.0) * A},
                            {"phi_contracted_0999", phi(dilate(m0.coeffs, 0.999, params), params)}};
        j.update(detail::regime_json(regime));
        write_json(detail::output_dir(opt, cfg) / "m0.json", j);
        return int(Ok);
    });
}

inline int cmd_solve(const Options& opt, std::ostream& err = std::cerr)
{
    return detail::guarded("solve", err, [&] {
        const RunConfig cfg = load_config(opt.config_path);
        const Params& params = cfg.params;
        const Regime regime = classify(params);
        cfg.solver.validate();
        const bool supported = regime.tag == RegimeTag::Existence && regime.cond21;
        if (!supported && !opt.override_regime) {
            err << "solve: regime " << to_string(regime.tag)
                << (regime.tag == RegimeTag::Existence ? " with cond21=false" : " (q = 2*(s2))")
                << " is outside the supported region; pass --override-regime to explore\n";
            return int(BadInput);
        }
        const GridPtr grid = detail::make_grid(cfg);
        StartKind start = StartKind::AmplitudeScan;
        std::optional<SolveReport> result;
        if (supported) {
            StartedReport r = descend_with_fallback(params, grid, cfg.solver);
            start = r.start;
            result = std::move(r.report);
        } else {
            result = descend_on_Mplus(initialize_by_amplitude_scan(params, grid, cfg.solver), params, cfg.solver);
        }
        const SolveReport& report = *result;

        const std::filesystem::path dir = detail::output_dir(opt, cfg);
        nlohmann::json j = {{"config", to_json(cfg)},
                            {"initialization", std::string(to_string(start))},
                            {"report", to_json(report)}};
        j.update(detail::regime_json(regime));
        write_json(dir / "report.json", j);
        write_text(dir / "solution.csv", field_csv(report.solution));
        write_text(dir / "trace.csv", trace_csv(report.trace));
        if (!report.converged()) {
            err << "solve: stopped with status " << to_string(report.status) << " after "
                << report.iterations << " iterations (residual " << format_double(report.residual) << ")\n";
            return int(NoConvergence);
        }
        return int(Ok);
    });
}

/// Number of random fields checked by certify.
inline constexpr int certify_fields = 100;

inline int cmd_certify(const Options& opt, std::ostream& err = std::cerr)
{
    return detail::guarded("certify", err, [&] {
        const RunConfig cfg = load_config(opt.config_path);
        const Params& params = cfg.params;
        const Regime regime = classify(params);
        if (regime.tag != RegimeTag::Critical) {
            err << "certify: requires q = 2*(s2); config is in the " << to_string(regime.tag) << " regime\n";
            return int(BadInput);
        }
        cfg.solver.validate();
        const GridPtr grid = detail::make_grid(cfg);
        const EliminationConstants k = elimination_constants(params);

        Rng rng(cfg.rng_seed);
        bool all_hold = true;
        nlohmann::json fields = nlohmann::json::array();
        for (int i = 0; i < certify_fields; ++i) {
            const GaussianField g = random_gaussian(rng);
            const FiberCoeffs c = extract_coeffs(sample_gaussian(grid, g), params);
            const double cert = nonexistence_certificate(c, params);
            const double eliminated = pohozaev_defect(c, params) - k.k1 * phi(c, params);
            const bool holds = cert >= c.Mms && c.Mms > 0.0;
            all_hold = all_hold && holds;
            fields.push_back({{"width", g.width},
                              {"amplitude", g.amplitude},
                              {"Mms", c.Mms},
                              {"B", c.B},
                              {"certificate", cert},
                              {"eliminated", eliminated},
                              {"holds", holds}});
        }

        const NonexistenceDiagnostic diag = nonexistence_diagnostic(params, grid, cfg.solver);
        nlohmann::json trace = nlohmann::json::array();
        for (const DiagnosticRow& row : diag.trace)
            trace.push_back({{"iter", row.iter},
                             {"I", row.I},
                             {"norm", row.norm},
                             {"Mms", row.Mms},
                             {"certificate", row.certificate},
                             {"residual", row.residual}});

        nlohmann::json j = {{"config", to_json(cfg)},
                            {"certificate_coeff", certificate_coeff(params)},
                            {"elimination", {{"k1", k.k1}, {"k2", k.k2}}},
                            {"fields", fields},
                            {"all_hold", all_hold},
                            {"diagnostic",
                             {{"classification", std::string(to_string(diag.classification))},
                              {"descent_status", std::string(to_string(diag.descent_status))},
                              {"initial_norm", diag.initial_norm},
                              {"final_norm", diag.final_norm},
                              {"final_residual", diag.final_residual},
                              {"final_certificate", diag.final_certificate},
                              {"certificate_bound_held", diag.certificate_bound_held},
                              {"trace", trace}}}};
        j.update(detail::regime_json(regime));
        write_json(detail::output_dir(opt, cfg) / "certify.json", j);
        if (!all_hold || !diag.certificate_bound_held) {
            err << "certify: certificate inequality failed\n";
            return int(Internal);
        }
        return int(Ok);
    });
}

struct ScanCell {
    double p = 0.0, q = 0.0;
    std::string regime;
    std::optional<bool> cond21;
    std::optional<double> m_plus;
    bool converged = false;
    std::optional<double> residual;
};

/// One (p, q) cell: full solve under cond21, amplitude-scan exploration for
/// the rest of the existence regime, nothing elsewhere.
inline ScanCell scan_cell(Params params, const GridSetting& gs, const SolverConfig& solver)
{
    ScanCell cell{params.p, params.q, "Invalid", std::nullopt, std::nullopt, false, std::nullopt};
    Regime regime;
    try {
        regime = classify(params);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::UnsupportedRegime) cell.regime = "Unsupported";
        return cell;
    }
    cell.regime = std::string(to_string(regime.tag));
    if (regime.tag != RegimeTag::Existence) return cell;
    cell.cond21 = regime.cond21;
    try {
        const GridPtr grid = build_grid(gs.n, gs.R, gs.gamma, params.N, params.s1, params.s2);
        const SolveReport report =
            regime.cond21 ? descend_with_fallback(params, grid, solver).report
                          : descend_on_Mplus(initialize_by_amplitude_scan(params, grid, solver), params, solver);
        cell.converged = report.converged();
        cell.residual = report.residual;
        if (cell.converged) cell.m_plus = report.m_plus;
    } catch (const Error&) {
        // no start or a numerical breakdown: the row stays blank
    }
    return cell;
}

inline std::string scan_csv(const std::vector<ScanCell>& cells)
{
    std::string s = "p,q,regime,cond21,m_plus,converged,residual\n";
    for (const ScanCell& c : cells) {
        s += format_double(c.p) + "," + format_double(c.q) + "," + c.regime + ",";
        if (c.cond21) s += *c.cond21 ? "true" : "false";
        s += "," + format_optional(c.m_plus) + "," + (c.converged ? "true" : "false") + ",";
        s += format_optional(c.residual) + "\n";
    }
    return s;
}

inline int cmd_scan(const Options& opt, std::ostream& err = std::cerr)
{
    return detail::guarded("scan", err, [&] {
        const RunConfig cfg = load_config(opt.config_path);
        classify(cfg.params);
        cfg.solver.validate();
        if (!cfg.scan) throw ConfigError("scan requires a 'scan' block");
        const ScanConfig& sc = *cfg.scan;
        const bool ranges_ok = sc.p_steps >= 1 && sc.q_steps >= 1 && std::isfinite(sc.p_min) &&
                               std::isfinite(sc.p_max) && std::isfinite(sc.q_min) && std::isfinite(sc.q_max) &&
                               sc.p_min <= sc.p_max && sc.q_min <= sc.q_max;
        if (!ranges_ok) throw ConfigError("scan ranges need min <= max and steps >= 1");

        std::vector<Params> cells;
        for (int j = 0; j < sc.q_steps; ++j)
            for (int i = 0; i < sc.p_steps; ++i) {
                Params p = cfg.params;
                p.p = sc.p_at(i);
                p.q = sc.q_at(j);
                cells.push_back(p);
            }

        // cells are independent; results are collected in row order
        const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
        std::vector<ScanCell> results;
        results.reserve(cells.size());
        for (std::size_t begin = 0; begin < cells.size(); begin += workers) {
            std::vector<std::future<ScanCell>> batch;
            for (std::size_t k = begin; k < std::min(cells.size(), begin + workers); ++k)
                batch.push_back(std::async(std::launch::async, scan_cell, cells[k], cfg.grid, cfg.solver));
            for (auto& f : batch) results.push_back(f.get());
        }
        write_text(detail::output_dir(opt, cfg) / "scan.csv", scan_csv(results));
        return int(Ok);
    });
}

} // namespace nehari::cli
