#pragma once

// Output artifacts: CSV with shortest round-trip decimals, JSON reports.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>

#include <nlohmann/json.hpp>

#include "nehari/identities.hpp"
#include "nehari/radial_grid.hpp"
#include "nehari/solver.hpp"

namespace nehari {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

inline std::string format_optional(const std::optional<double>& x)
{
    return x ? format_double(*x) : std::string{};
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    write_text(path, j.dump(2) + "\n");
}

/// CSV with header `r,u`, one row per node.
inline std::string field_csv(const RadialField& f)
{
    std::string s = "r,u\n";
    for (int i = 0; i <= f.grid().n(); ++i) {
        s += format_double(f.grid().node(i));
        s += ',';
        s += format_double(f[i]);
        s += '\n';
    }
    return s;
}

/// CSV with header `iter,I,phi,psi,residual`.
inline std::string trace_csv(const std::vector<TraceRow>& trace)
{
    std::string s = "iter,I,phi,psi,residual\n";
    for (const TraceRow& row : trace) {
        s += std::to_string(row.iter);
        for (double v : {row.I, row.phi, row.psi, row.residual}) {
            s += ',';
            s += format_double(v);
        }
        s += '\n';
    }
    return s;
}

inline nlohmann::json to_json(const FiberCoeffs& c)
{
    return {{"D", c.D}, {"Mms", c.Mms}, {"B", c.B}, {"C", c.C}};
}

inline nlohmann::json to_json(const IdentityReport& r)
{
    nlohmann::json j = {{"nehari", r.nehari},
                        {"pohozaev", r.pohozaev},
                        {"certificate_coeff", r.certificate_coeff}};
    j["certificate"] = r.certificate ? nlohmann::json(*r.certificate) : nlohmann::json(nullptr);
    return j;
}

/// Report document. Integrals omit the surface measure of the unit sphere.
inline nlohmann::json to_json(const SolveReport& r)
{
    return {{"status", std::string(to_string(r.status))},
            {"m_plus", r.m_plus},
            {"residual", r.residual},
            {"mu", r.mu},
            {"grad_phi_norm", r.grad_phi_norm},
            {"nehari_residual", r.nehari_residual},
            {"pohozaev_residual", r.pohozaev_residual},
            {"psi_value", r.psi_value},
            {"iterations", r.iterations},
            {"positivity", r.positivity},
            {"last_clamp_iter", r.last_clamp_iter},
            {"coeffs", to_json(r.coeffs)},
            {"identities", to_json(r.identities)},
            {"angular_measure", "omitted"}};
}

} // namespace nehari
