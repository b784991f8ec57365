// nehari: command-line front end.
//
//   nehari <validate|fiber|m0|solve|certify|scan> --config run.json [--out dir]

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nehari/cli.hpp"

int main(int argc, char** argv)
{
    namespace cli = nehari::cli;
    CLI::App app{"Radial ground states on the Nehari manifold"};
    app.require_subcommand(1);

    cli::Options opt;
    std::string out_dir;
    std::string coeffs;

    auto add = [&](const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_dir, "output directory (default ./out)");
        return sub;
    };
    CLI::App* validate = add("validate", "check parameters and print the regime");
    CLI::App* fiber = add("fiber", "fiber map roots and samples");
    CLI::App* m0 = add("m0", "dilation construction of an M0 point");
    CLI::App* solve = add("solve", "minimize the energy on M+");
    CLI::App* certify = add("certify", "nonexistence certificate checks");
    CLI::App* scan = add("scan", "sweep (p, q)");
    solve->add_flag("--override-regime", opt.override_regime, "solve outside the supported region");
    for (CLI::App* sub : {fiber, m0}) sub->add_option("--coeffs", coeffs, "D,M,B,C coefficient override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::BadInput;
    }

    if (!out_dir.empty()) opt.out_dir = out_dir;
    if (!coeffs.empty()) opt.coeffs = coeffs;

    if (validate->parsed()) return cli::cmd_validate(opt);
    if (fiber->parsed()) return cli::cmd_fiber(opt);
    if (m0->parsed()) return cli::cmd_m0(opt);
    if (solve->parsed()) return cli::cmd_solve(opt);
    if (certify->parsed()) return cli::cmd_certify(opt);
    if (scan->parsed()) return cli::cmd_scan(opt);
    return cli::Internal;
}
