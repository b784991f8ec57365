#pragma once

// JSON run configuration. Unknown keys are rejected; every default is filled
// in so that the echoed document fully describes the run.

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "nehari/error.hpp"
#include "nehari/params.hpp"
#include "nehari/solver.hpp"

namespace nehari {

struct ScanConfig {
    double p_min = 0.0, p_max = 0.0;
    int p_steps = 0;
    double q_min = 0.0, q_max = 0.0;
    int q_steps = 0;

    double p_at(int i) const { return p_steps == 1 ? p_min : p_min + (p_max - p_min) * i / (p_steps - 1); }
    double q_at(int j) const { return q_steps == 1 ? q_min : q_min + (q_max - q_min) * j / (q_steps - 1); }
};

struct RunConfig {
    Params params;
    GridSetting grid;
    SolverConfig solver;
    std::optional<ScanConfig> scan;
    std::optional<FiberCoeffs> coeffs; // fiber / m0 override
    std::uint64_t rng_seed = 0;
    std::optional<std::string> outputs;
};

/// Raised for structurally malformed configuration documents.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("key '") + key + "' has the wrong type");
    }
}

template <class T>
T get_required(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + where);
    return get_or<T>(j, key, T{});
}

} // namespace detail

inline FiberCoeffs parse_coeffs(const std::string& text)
{
    std::array<double, 4> v{};
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        const std::size_t end = text.find(',', pos);
        if ((k < 3) == (end == std::string::npos)) throw ConfigError("--coeffs expects D,M,B,C");
        const std::string item = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        try {
            std::size_t used = 0;
            v[k] = std::stod(item, &used);
            if (used != item.size()) throw ConfigError("--coeffs: bad number '" + item + "'");
        } catch (const std::logic_error&) {
            throw ConfigError("--coeffs: bad number '" + item + "'");
        }
        pos = end + 1;
    }
    for (double x : v)
        if (!std::isfinite(x) || x < 0.0) throw ConfigError("--coeffs entries must be finite and >= 0");
    return {v[0], v[1], v[2], v[3]};
}

inline RunConfig parse_config(const nlohmann::json& j)
{
    using namespace detail;
    reject_unknown(j, {"params", "grid", "solver", "scan", "coeffs", "rng_seed", "outputs"}, "config");

    RunConfig cfg;
    if (!j.contains("params")) throw ConfigError("missing 'params' block");
    const json& p = j.at("params");
    reject_unknown(p, {"N", "lambda", "s1", "s2", "p", "q"}, "params");
    cfg.params.N = get_required<int>(p, "N", "params");
    cfg.params.lambda = get_required<double>(p, "lambda", "params");
    cfg.params.s1 = get_required<double>(p, "s1", "params");
    cfg.params.s2 = get_required<double>(p, "s2", "params");
    cfg.params.p = get_required<double>(p, "p", "params");
    cfg.params.q = get_required<double>(p, "q", "params");

    if (j.contains("grid")) {
        const json& g = j.at("grid");
        reject_unknown(g, {"n", "R", "gamma"}, "grid");
        cfg.grid.n = get_or(g, "n", cfg.grid.n);
        cfg.grid.R = get_or(g, "R", cfg.grid.R);
        cfg.grid.gamma = get_or(g, "gamma", cfg.grid.gamma);
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        reject_unknown(s, {"tol", "max_iter", "armijo_c", "step0", "seed_width", "dilation_backoff"}, "solver");
        cfg.solver.tol = get_or(s, "tol", cfg.solver.tol);
        cfg.solver.max_iter = get_or(s, "max_iter", cfg.solver.max_iter);
        cfg.solver.armijo_c = get_or(s, "armijo_c", cfg.solver.armijo_c);
        cfg.solver.step0 = get_or(s, "step0", cfg.solver.step0);
        cfg.solver.seed_width = get_or(s, "seed_width", cfg.solver.seed_width);
        cfg.solver.dilation_backoff = get_or(s, "dilation_backoff", cfg.solver.dilation_backoff);
    }
    if (j.contains("scan")) {
        const json& s = j.at("scan");
        reject_unknown(s, {"p_min", "p_max", "p_steps", "q_min", "q_max", "q_steps"}, "scan");
        ScanConfig sc;
        sc.p_min = get_required<double>(s, "p_min", "scan");
        sc.p_max = get_required<double>(s, "p_max", "scan");
        sc.p_steps = get_required<int>(s, "p_steps", "scan");
        sc.q_min = get_required<double>(s, "q_min", "scan");
        sc.q_max = get_required<double>(s, "q_max", "scan");
        sc.q_steps = get_required<int>(s, "q_steps", "scan");
        cfg.scan = sc;
    }
    if (j.contains("coeffs")) {
        const json& c = j.at("coeffs");
        if (!c.is_array() || c.size() != 4) throw ConfigError("'coeffs' must be [D, M, B, C]");
        FiberCoeffs fc;
        try {
            fc = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>(), c[3].get<double>()};
        } catch (const json::exception&) {
            throw ConfigError("'coeffs' entries must be numbers");
        }
        cfg.coeffs = fc;
    }
    cfg.rng_seed = get_or<std::uint64_t>(j, "rng_seed", 0);
    if (j.contains("outputs")) cfg.outputs = get_or<std::string>(j, "outputs", "");
    return cfg;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

/// The resolved configuration, defaults included. The output location is not
/// part of the echo, so identical runs produce identical files anywhere.
inline nlohmann::json to_json(const RunConfig& cfg)
{
    nlohmann::json j;
    j["params"] = {{"N", cfg.params.N},   {"lambda", cfg.params.lambda}, {"s1", cfg.params.s1},
                   {"s2", cfg.params.s2}, {"p", cfg.params.p},           {"q", cfg.params.q}};
    j["grid"] = {{"n", cfg.grid.n}, {"R", cfg.grid.R}, {"gamma", cfg.grid.gamma}};
    j["solver"] = {{"tol", cfg.solver.tol},
                   {"max_iter", cfg.solver.max_iter},
                   {"armijo_c", cfg.solver.armijo_c},
                   {"step0", cfg.solver.step0},
                   {"seed_width", cfg.solver.seed_width},
                   {"dilation_backoff", cfg.solver.dilation_backoff}};
    if (cfg.scan)
        j["scan"] = {{"p_min", cfg.scan->p_min}, {"p_max", cfg.scan->p_max}, {"p_steps", cfg.scan->p_steps},
                     {"q_min", cfg.scan->q_min}, {"q_max", cfg.scan->q_max}, {"q_steps", cfg.scan->q_steps}};
    if (cfg.coeffs) j["coeffs"] = {cfg.coeffs->D, cfg.coeffs->Mms, cfg.coeffs->B, cfg.coeffs->C};
    j["rng_seed"] = cfg.rng_seed;
    return j;
}

} // namespace nehari
