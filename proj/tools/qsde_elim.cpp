#include <iostream>

#include <CLI11.hpp>

#include "qsde_elim/cli.hpp"

int main(int argc, char** argv) {
    using namespace qsde_elim;
    CLI::App app{"Adiabatic elimination of a fast oscillator from quantum stochastic models"};
    app.require_subcommand(1, 1);

    std::string config_path;
    RunOptions opt;
    std::string out_dir, format;
    double tol = 0.0;

    for (const char* name : {"eliminate", "verify", "sweep", "diagrams"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--format", format, "json, csv or both (overrides output.format)")
            ->check(CLI::IsMember({"json", "csv", "both"}));
        sub->add_option("--tol", tol, "relative flow tolerance (overrides tolerances.rel)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--jobs", opt.jobs, "parallel epsilon tasks")->check(CLI::Range(1, 256));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (!out_dir.empty()) opt.out_dir = out_dir;
    if (!format.empty()) opt.format = format;
    if (tol > 0.0) opt.tol = tol;
    const std::string subcommand = app.get_subcommands().front()->get_name();

    try {
        const Config cfg = parse_config(config_path);
        const RunOutcome out = run(cfg, subcommand, opt);
        std::cout << out.summary;
        for (const auto& a : out.artifacts) std::cout << "wrote " << a << "\n";
        std::cout << (out.pass ? "PASS" : "FAIL") << " " << subcommand << "\n";
        return out.pass ? kExitPass : kExitFail;
    } catch (const std::exception& e) {
        std::cerr << "qsde-elim " << subcommand << ": " << e.what() << "\n";
        return exit_code_for(e);
    }
}
