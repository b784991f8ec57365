// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "nehari/fiber_algebra.hpp"
#include "nehari/functional.hpp"
#include "nehari/identities.hpp"
#include "nehari/rng.hpp"
#include "nehari/solver.hpp"
#include "oracles.hpp"

using namespace nehari;
namespace fs = std::filesystem;

namespace {

// pinned tolerances and limits
constexpr double root_tol = 1e-8;
constexpr double m0_tol = 1e-10;
constexpr double orbit_tol = 1e-8;
constexpr double identity_tol = 1e-10;
constexpr double fd_tol = 1e-6;
constexpr double pairing_tol = 1e-8;
constexpr double fd_eps = 1e-5;
constexpr double solve_tol = 1e-6;
constexpr int solve_max_iter = 5000;
constexpr double multiplier_tol = 1e-5;
constexpr double pohozaev_tol = 5e-3;
constexpr double refine_tol = 1e-2;
constexpr double truncation_tol = 1e-4;
constexpr double golden_m_plus = 0.284100312409861;
constexpr double golden_tol = 1e-9;
constexpr double elimination_tol = 1e-13;
constexpr double time_fiber = 10.0, time_m0 = 10.0, time_calculus = 60.0, time_solve = 60.0;

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what)
    {
        if (!ok && pass) detail = "first failure: " + what + "; " + detail;
        pass = pass && ok;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("nehari_accept_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_exe(const std::string& args, const fs::path& log_dir)
{
    const std::string cmd = std::string("\"") + NEHARI_EXE + "\" " + args + " > \"" +
                            (log_dir / "stdout.txt").string() + "\" 2> \"" + (log_dir / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j)
{
    const fs::path path = dir / "config.json";
    std::ofstream(path) << j.dump(2);
    return path;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json base_config(double p, double q, int n)
{
    return {{"params", {{"N", 3}, {"lambda", 1.0}, {"s1", 0.0}, {"s2", 1.0}, {"p", p}, {"q", q}}},
            {"grid", {{"n", n}, {"R", 20.0}, {"gamma", 2.0}}},
            {"rng_seed", 12345}};
}

// Under cond21 the M0 point can lie far outside the double range (r0 ~ 1e-1000
// when the dilation exponent is near 0). Returns 1 if construct_M0 succeeds,
// 0 if it refuses and the log-space oracle confirms the range problem; any
// other refusal is recorded as a failure.
int representable_m0(const FiberCoeffs& c, const Params& P, Outcome& o, int& rejected)
{
    constexpr long double log_max = 709.78L, log_min = -708.39L; // log DBL_MAX, log DBL_MIN
    const oracle::M0LogRange range = oracle::m0_log_range(c, P);
    try {
        construct_M0(c, P);
        o.require(range.hi < log_max + 1 && range.lo > log_min - 1, "construct_M0 returned an out-of-range point");
        return 1;
    } catch (const Error& e) {
        const bool outside = range.hi > log_max - 1 || range.lo < log_min + 1;
        o.require(e.kind() == ErrorKind::NumericalFailure && outside, std::string("construct_M0 refused: ") + e.what());
        ++rejected;
        return 0;
    }
}

// 1. fiber roots against the dense-scan oracle
Outcome fiber_roots_suite()
{
    Outcome o;
    oracle::TupleGen gen(101);
    double lib_time = 0.0, max_dt = 0.0;
    int h_samples = 0;
    for (int k = 0; k < 1000; ++k) {
        const Params P = gen.fiber_params();
        const FiberCoeffs c = gen.negative_fiber(P);
        const auto t0 = std::chrono::steady_clock::now();
        const FiberRoots r = fiber_roots(c, P);
        const double psi0 = psi(scale_amplitude(c, r.t0, P), P);
        lib_time += seconds_since(t0);

        const oracle::Roots ref = oracle::dense_scan_roots(c, P);
        o.require(ref.sign_changes == 2, "oracle sign changes " + std::to_string(ref.sign_changes));
        const double dt = std::max(std::abs(r.t0 - ref.t0), std::abs(r.t1 - ref.t1));
        max_dt = std::max(max_dt, dt);
        o.require(dt <= root_tol, "tuple " + std::to_string(k) + " |dt|=" + fmt(dt));
        o.require(psi0 < 0.0, "psi(t0) >= 0 at tuple " + std::to_string(k));
        for (double x = 1.0 + 1e-6; x <= 100.0; x *= 1.3) {
            o.require(h_compare(x, P) < 0.0, "h_compare(" + fmt(x) + ") >= 0");
            ++h_samples;
        }
        o.require(h_compare(100.0, P) < 0.0, "h_compare(100) >= 0");
    }
    o.require(lib_time <= time_fiber, "library time " + fmt(lib_time) + " s");
    o.detail += "1000 tuples, max|dt|=" + fmt(max_dt) + ", " + std::to_string(h_samples) +
                " h_compare samples, library time " + fmt(lib_time) + " s";
    return o;
}

// 2. M0 construction
Outcome m0_suite()
{
    Outcome o;
    oracle::TupleGen gen(202);
    double lib_time = 0.0, worst = 0.0, worst_orbit = 0.0;
    int out_of_range = 0;
    for (int k = 0; k < 1000;) {
        const Params P = gen.cond21_params();
        const FiberCoeffs c = gen.positive_tuple();
        const double rho = std::exp(gen.uniform(-3.0, 3.0));
        const std::string tag = " at tuple " + std::to_string(k);
        if (representable_m0(c, P, o, out_of_range) != 1) continue;
        ++k;
        try {
            const auto t0 = std::chrono::steady_clock::now();
            const M0Point m = construct_M0(c, P);
            const double sign = m0_perturbation_sign(m, P);
            const double contracted = phi(dilate(m.coeffs, 0.999, P), P);
            const M0Point mr = construct_M0(dilate(c, rho, P), P);
            lib_time += seconds_since(t0);

            const double A = m.coeffs.A();
            const double rel = std::max(std::abs(phi(m.coeffs, P)), std::abs(psi(m.coeffs, P))) / A;
            worst = std::max(worst, rel);
            o.require(rel <= m0_tol, "|phi|,|psi| = " + fmt(rel) + " A" + tag);
            o.require(sign > 0.0, "perturbation sign <= 0" + tag);
            o.require(contracted < 0.0, "phi after 0.999 contraction >= 0" + tag);
            const FiberCoeffs& a = m.coeffs;
            const FiberCoeffs& b = mr.coeffs;
            // Mms may have underflowed next to D; compare it on the scale of A
            const double orbit = std::max({std::abs(a.D - b.D) / a.D, std::abs(a.Mms - b.Mms) / A,
                                           std::abs(a.B - b.B) / a.B, std::abs(a.C - b.C) / a.C,
                                           std::abs(mr.log_r0 + std::log(rho) - m.log_r0) /
                                               std::max(1.0, std::abs(m.log_r0))});
            worst_orbit = std::max(worst_orbit, orbit);
            o.require(orbit <= orbit_tol, "orbit invariance " + fmt(orbit) + tag);
        } catch (const Error& e) {
            o.require(false, std::string(e.what()) + tag);
        }
    }
    o.require(lib_time <= time_m0, "library time " + fmt(lib_time) + " s");
    o.detail += std::to_string(out_of_range) + " draws with M0 outside double range rejected, 1000 tuples, max |phi|,|psi| / A = " + fmt(worst) + ", orbit " + fmt(worst_orbit) +
                ", library time " + fmt(lib_time) + " s";
    return o;
}

// 3. on-manifold identities in coefficient space
Outcome identities_suite()
{
    Outcome o;
    oracle::TupleGen gen(303);
    double worst = 0.0;
    int out_of_range = 0;
    for (int k = 0; k < 1000; ++k) {
        const std::string tag = " at tuple " + std::to_string(k);
        // a point of M⁺
        const Params P = gen.fiber_params();
        const FiberCoeffs c = gen.negative_fiber(P);
        const FiberCoeffs m = scale_amplitude(c, fiber_roots(c, P).t0, P);
        const double A = m.A(), pq = P.p * P.q;
        const double ps = psi(m, P);
        const double e_id = std::abs(energy(m, P) - ((P.p - 2) * (P.q - 2) / (2 * pq) * A - ps / pq));
        const double lb = std::abs(P.lambda * m.B - ((P.q - 2) * A + ps) / (P.p - P.q));
        const double cc = std::abs(m.C - ((P.p - 2) * A + ps) / (P.p - P.q));
        const ManifoldPrediction pr = on_manifold_identities(m, P);
        const double lib = std::max(std::abs(pr.lambdaB_pred - P.lambda * m.B), std::abs(pr.C_pred - m.C));
        const double rel = std::max({e_id, lb, cc, lib}) / A;
        worst = std::max(worst, rel);
        o.require(rel <= identity_tol, "identity defect " + fmt(rel) + " A" + tag);

        // a point of M0
        Params Q;
        FiberCoeffs cz;
        do {
            Q = gen.cond21_params();
            cz = gen.positive_tuple();
        } while (representable_m0(cz, Q, o, out_of_range) != 1);
        const M0Point z = construct_M0(cz, Q);
        const double Az = z.coeffs.A();
        const double pairing = std::abs(psi_prime_pairing(z.coeffs, Q) - (Q.p - 2) * (Q.q - 2) * Az) / Az;
        worst = std::max(worst, pairing);
        o.require(pairing <= identity_tol, "<psi'(u),u> defect " + fmt(pairing) + " A" + tag);
    }
    o.detail += "1000 M+ tuples and 1000 M0 tuples (" + std::to_string(out_of_range) +
                " out-of-range draws rejected), max defect " + fmt(worst) + " A";
    return o;
}

// 4. discrete calculus
Outcome calculus_suite()
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const Params P{3, 1.0, 0.0, 1.0, 5.0, 3.8};
    const GridPtr g = build_grid(512, 20, 2, 3, 0, 1);
    std::mt19937_64 gen(404);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const auto smooth = [&] {
        const double a = 0.2 + 1.5 * u01(gen), w = 0.5 + 2.0 * u01(gen), c = u01(gen) - 0.5, k = 0.5 + 2 * u01(gen);
        return RadialField::sample(g, [=](double r) { return a * std::exp(-r * r / (2 * w * w)) * (1 + c * std::cos(k * r)); });
    };
    double worst_fd = 0.0, worst_pair = 0.0;
    for (int k = 0; k < 50; ++k) {
        const RadialField u = smooth(), w = smooth();
        RadialField up = u, um = u;
        up.axpy(fd_eps, w);
        um.axpy(-fd_eps, w);
        const FunctionalEval ep = evaluate(up, P), em = evaluate(um, P), e = evaluate(u, P);
        const RadialField gI = grad_I(u, P), gphi = grad_phi(u, P);

        const double dI = (ep.I - em.I) / (2 * fd_eps), aI = h1_inner(gI, w);
        const double dphi = (ep.phi - em.phi) / (2 * fd_eps), aphi = h1_inner(gphi, w);
        const double fd = std::max(std::abs(dI - aI) / std::abs(aI), std::abs(dphi - aphi) / std::abs(aphi));
        worst_fd = std::max(worst_fd, fd);
        o.require(fd <= fd_tol, "finite difference mismatch " + fmt(fd) + " at pair " + std::to_string(k));

        const double scale = e.coeffs.A() + P.lambda * e.coeffs.B + e.coeffs.C;
        const double pair = std::max(std::abs(h1_inner(gI, u) - e.phi), std::abs(h1_inner(gphi, u) - (e.phi + e.psi))) / scale;
        worst_pair = std::max(worst_pair, pair);
        o.require(pair <= pairing_tol, "pairing mismatch " + fmt(pair) + " at pair " + std::to_string(k));
    }
    const double elapsed = seconds_since(t0);
    o.require(elapsed <= time_calculus, "time " + fmt(elapsed) + " s");
    o.detail += "50 pairs at n=512, max fd error " + fmt(worst_fd) + ", max pairing error " + fmt(worst_pair) +
                ", time " + fmt(elapsed) + " s";
    return o;
}

// 5. desk ground state
Outcome desk_suite()
{
    Outcome o;
    const Params P{3, 1.0, 0.0, 1.0, 5.0, 3.8};
    SolverConfig cfg;
    cfg.tol = solve_tol;
    cfg.max_iter = solve_max_iter;
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const SolveReport r = solve(P, {1024, 20, 2}, cfg);
        const double elapsed = seconds_since(t0);
        o.require(elapsed <= time_solve, "time " + fmt(elapsed) + " s");
        o.require(r.converged() && r.residual <= solve_tol, "not converged");
        o.require(r.iterations <= solve_max_iter, "iterations");
        o.require(r.m_plus > 0.0, "m+ <= 0");
        o.require(r.psi_value < 0.0, "psi >= 0");
        o.require(r.positivity > 0.0, "interior minimum " + fmt(r.positivity));
        const double mult = std::abs(r.mu) * r.grad_phi_norm;
        o.require(mult <= multiplier_tol, "|mu| |grad phi| = " + fmt(mult));
        o.require(r.pohozaev_residual <= pohozaev_tol, "Pohozaev residual " + fmt(r.pohozaev_residual));
        const double golden = std::abs(r.m_plus - golden_m_plus) / golden_m_plus;
        o.require(golden <= golden_tol, "golden m+ drift " + fmt(golden));

        const SolveReport coarse = solve(P, {512, 20, 2}, cfg);
        const double refine = std::abs(coarse.m_plus - r.m_plus) / r.m_plus;
        o.require(refine <= refine_tol, "n=512 vs 1024 change " + fmt(refine));
        // R = 40 at the same cell widths near the origin
        const SolveReport wide = solve(P, {1448, 40, 2}, cfg);
        const double trunc = std::abs(wide.m_plus - r.m_plus) / r.m_plus;
        o.require(trunc <= truncation_tol, "R=20 vs R=40 change " + fmt(trunc));
        const SolveReport wide_fixed = solve(P, {1024, 40, 2}, cfg);
        const double trunc_fixed = std::abs(wide_fixed.m_plus - r.m_plus) / r.m_plus;

        char buf[512];
        std::snprintf(buf, sizeof buf,
                      "m+=%.15g in %d iterations, residual %.3g, time %.3g s, |mu||grad phi|=%.3g, "
                      "Pohozaev %.3g, n=512 change %.3g, R=40 (n=1448) change %.3g "
                      "(R=40 at n=1024: %.3g)",
                      r.m_plus, r.iterations, r.residual, elapsed, mult, r.pohozaev_residual, refine, trunc,
                      trunc_fixed);
        o.detail += buf;
    } catch (const Error& e) {
        o.require(false, e.what());
    }
    return o;
}

// 6. nonexistence certificate
Outcome certificate_suite()
{
    Outcome o;
    const GridPtr g = build_grid(1024, 20, 2, 3, 0, 1);
    int fields = 0;
    for (double p : {4.5, 5.0, 6.0}) {
        const Params P{3, 1.0, 0.0, 1.0, p, 4.0};
        Rng rng(606);
        for (int k = 0; k < 100; ++k) {
            const FiberCoeffs c = extract_coeffs(sample_gaussian(g, random_gaussian(rng)), P);
            o.require(c.Mms > 0.0, "zero field");
            o.require(nonexistence_certificate(c, P) >= c.Mms, "certificate < Mms at p=" + fmt(p));
            ++fields;
        }
    }

    oracle::TupleGen gen(607);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double p = gen.uniform(4.0 + 1e-3, 6.0);
        const Params P{3, gen.uniform(0.2, 5.0), 0.0, 1.0, p, 4.0};
        const FiberCoeffs c = gen.positive_tuple();
        const EliminationConstants e = elimination_constants(P);
        const double scale = c.A() + P.lambda * c.B + c.C;
        const double cert = nonexistence_certificate(c, P);
        const double identity = std::abs(cert - (pohozaev_defect(c, P) - e.k1 * phi(c, P))) / scale;
        const double bound = c.Mms / c.A() - (e.k1 * nehari_residual(c, P) + e.k2 * pohozaev_residual(c, P));
        worst = std::max(worst, identity);
        o.require(identity <= elimination_tol, "elimination identity " + fmt(identity));
        o.require(bound <= elimination_tol * scale / c.A(), "elimination bound exceeded by " + fmt(bound));
    }

    int exits = 0;
    for (double p : {4.5, 5.0, 6.0}) {
        const fs::path dir = scratch("certify_" + fmt(p));
        const fs::path config = write_config(dir, base_config(p, 4.0, 1024));
        const int code = run_exe("certify --config \"" + config.string() + "\" --out \"" + (dir / "out").string() + "\"", dir);
        o.require(code == 0, "certify exit " + std::to_string(code) + " at p=" + fmt(p));
        exits += code == 0;
    }
    o.detail += std::to_string(fields) + " fields, 1000 tuples (max identity defect " + fmt(worst) +
                "), certify exit 0 on " + std::to_string(exits) + "/3 configs";
    return o;
}

// 7. regime gate
Outcome regime_suite()
{
    Outcome o;
    const fs::path dir = scratch("scan");
    nlohmann::json cfg = base_config(5.0, 3.8, 256);
    cfg["solver"] = {{"max_iter", 2000}};
    cfg["scan"] = {{"p_min", 4.2}, {"p_max", 5.8}, {"p_steps", 5}, {"q_min", 3.0}, {"q_max", 3.9}, {"q_steps", 5}};
    const fs::path config = write_config(dir, cfg);
    const int code = run_exe("scan --config \"" + config.string() + "\" --out \"" + (dir / "out").string() + "\"", dir);
    o.require(code == 0, "scan exit " + std::to_string(code));

    // grid in integer units: p = (42 + 4i)/10, q = (3000 + 225j)/1000; q > p/2 + 1 iff 2(q-2) > p-2
    std::ifstream in(dir / "out" / "scan.csv");
    std::string line;
    std::getline(in, line);
    int rows = 0, on_boundary = 0;
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 5; ++i) {
            if (!std::getline(in, line)) {
                o.require(false, "scan.csv too short");
                break;
            }
            const long p_tenths = 42 + 4 * i, q_milli = 3000 + 225 * j;
            const long lhs = 2 * (q_milli - 2000), rhs = (p_tenths - 20) * 100;
            const bool expect = lhs > rhs;
            on_boundary += lhs == rhs;
            std::vector<std::string> cells;
            std::stringstream ss(line);
            for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
            o.require(cells.size() >= 4 && cells[3] == (expect ? "true" : "false"), "row '" + line + "'");
            ++rows;
        }

    std::mt19937_64 gen(707);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int draws = 0, mismatches = 0;
    while (draws < 10000) {
        const int N = 3 + static_cast<int>(3 * u01(gen));
        const double s2 = 1.99 * u01(gen), s1 = s2 * u01(gen);
        const double c1 = critical_exponent(N, s1), c2 = critical_exponent(N, s2);
        const double q = 2.0 + (c2 - 2.0) * u01(gen);
        const double p = q + (c1 - q) * u01(gen);
        if (!(s1 < s2 && q > 2.0 && p > q && p < c1 && q < c2)) continue;
        const double lhs = (2.0 - s1) * (q - 2.0), rhs = (2.0 - s2) * (p - 2.0);
        if (std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(lhs))) continue; // within rounding of the boundary
        ++draws;
        if (condition21(s1, s2, p, q) != (lhs > rhs)) ++mismatches;
    }
    o.require(mismatches == 0, std::to_string(mismatches) + " algebraic mismatches");
    o.detail += std::to_string(rows) + " scan rows (" + std::to_string(on_boundary) +
                " on the line) match q > p/2 + 1, 10000 draws agree";
    return o;
}

// 8. byte-identical outputs
Outcome reproducibility_suite()
{
    Outcome o;
    nlohmann::json solve_cfg = base_config(5.0, 3.8, 1024);
    nlohmann::json scan_cfg = base_config(5.0, 3.8, 256);
    scan_cfg["solver"] = {{"max_iter", 2000}};
    scan_cfg["scan"] = {{"p_min", 4.2}, {"p_max", 5.8}, {"p_steps", 5}, {"q_min", 3.0}, {"q_max", 3.9}, {"q_steps", 5}};
    int files = 0;
    for (const auto& [sub, cfg, names] :
         {std::tuple{std::string("solve"), solve_cfg, std::vector<std::string>{"report.json", "solution.csv", "trace.csv"}},
          std::tuple{std::string("scan"), scan_cfg, std::vector<std::string>{"scan.csv"}}}) {
        std::string first[3];
        for (int run = 0; run < 2; ++run) {
            const fs::path dir = scratch(sub + std::to_string(run));
            const fs::path config = write_config(dir, cfg);
            const int code = run_exe(sub + " --config \"" + config.string() + "\" --out \"" + (dir / "out").string() + "\"", dir);
            o.require(code == 0, sub + " exit " + std::to_string(code));
            for (std::size_t f = 0; f < names.size(); ++f) {
                const std::string bytes = slurp(dir / "out" / names[f]);
                o.require(!bytes.empty(), names[f] + " empty");
                if (run == 0)
                    first[f] = bytes;
                else {
                    o.require(bytes == first[f], names[f] + " differs between runs");
                    ++files;
                }
            }
        }
    }
    o.detail += std::to_string(files) + " output files byte-identical across two runs";
    return o;
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> suites = {
        {"fiber roots vs dense-scan oracle", fiber_roots_suite},
        {"M0 construction", m0_suite},
        {"on-manifold identities", identities_suite},
        {"discrete calculus", calculus_suite},
        {"desk ground state", desk_suite},
        {"nonexistence certificate", certificate_suite},
        {"regime gate", regime_suite},
        {"reproducibility", reproducibility_suite},
    };
    int failed = 0;
    for (std::size_t k = 0; k < suites.size(); ++k) {
        Outcome o;
        try {
            o = suites[k].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::printf("criterion %zu %s: %s  (%s)\n", k + 1, suites[k].first.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    fs::remove_all(fs::temp_directory_path() / ("nehari_accept_" + std::to_string(::getpid())));
    return failed == 0 ? 0 : 1;
}
