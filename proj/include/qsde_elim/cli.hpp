// cli.hpp: The four subcommands of the qsde-elim tool, callable in-process.

#pragma once

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qsde_elim/config.hpp"
#include "qsde_elim/report.hpp"

namespace qsde_elim {

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitUsage = 2, kExitNumeric = 3 };

struct RunOptions {
    std::optional<std::string> out_dir;
    std::optional<std::string> format;
    std::optional<double> tol;  // overrides tolerances.rel
    int jobs = 1;
};

struct RunOutcome {
    bool pass = false;
    std::vector<std::string> artifacts;
    std::string summary;  // one line per verdict
};

namespace cli_detail {

inline void line(std::ostringstream& os, bool pass, const std::string& what) {
    os << (pass ? "PASS " : "FAIL ") << what << "\n";
}

inline void emit(RunOutcome& out, const std::filesystem::path& dir, const std::string& stem, const report::json& body) {
    report::json doc = body;
    doc["metadata"] = report::metadata();
    const auto path = dir / (stem + ".json");
    report::write_file(path, report::dump(doc));
    out.artifacts.push_back(path.string());
}

inline void summarise(std::ostringstream& os, const std::vector<Check>& cs) {
    for (const auto& c : cs) {
        std::ostringstream v;
        v << c.name << " = " << c.value << " (threshold " << c.threshold << ")";
        line(os, c.pass, v.str());
    }
}

}  // namespace cli_detail

inline RunOutcome run(const Config& cfg_in, const std::string& subcommand, const RunOptions& opt = {}) {
    Config cfg = cfg_in;
    if (opt.out_dir) cfg.out_dir = *opt.out_dir;
    if (opt.format) cfg.format = *opt.format;
    if (opt.tol) cfg.tol.rel = *opt.tol;
    if (cfg.format != "json" && cfg.format != "csv" && cfg.format != "both")
        throw ConfigError("--format: must be json, csv or both");
    if (!(cfg.tol.rel > 0.0)) throw ConfigError("--tol: must be positive");
    if (opt.jobs < 1) throw ConfigError("--jobs: must be >= 1");
    const std::filesystem::path dir(cfg.out_dir);
    const bool want_json = cfg.format != "csv", want_csv = cfg.format != "json";

    RunOutcome out;
    std::ostringstream os;
    report::json body;

    if (subcommand == "eliminate") {
        const auto checks = elimination_checks(cfg.model);
        const LimitModel lm = eliminate(cfg.model);
        body = {{"model_dim", static_cast<long>(cfg.model.dim())},
                {"gamma", cfg.model.gamma},
                {"margin", validate_prelim(cfg.model).margin},
                {"limit", report::limit_model(lm)},
                {"evans", report::evans(evans_matrix(cfg.model))},
                {"checks", report::checks(checks)}};
        out.pass = all_pass(checks);
        cli_detail::summarise(os, checks);
        if (want_json) cli_detail::emit(out, dir, "eliminate", body);
    } else if (subcommand == "verify") {
        auto checks = elimination_checks(cfg.model);
        for (auto& c : regulated_checks(cfg.model.gamma)) checks.push_back(c);
        for (auto& c : wick_checks(cfg.verify.wick_cases, cfg.verify.wick_max_n, cfg.verify.seed)) checks.push_back(c);
        out.pass = all_pass(checks);
        body = {{"checks", report::checks(checks)}, {"pass", out.pass}};
        cli_detail::summarise(os, checks);
        if (want_json) cli_detail::emit(out, dir, "verify", body);
    } else if (subcommand == "sweep") {
        out.pass = true;
        for (const auto& sc : cfg.scenarios) {
            const Scenario& s = sc.scenario;
            const auto rep = sweep_epsilon(s, sc.mode, opt.jobs, cfg.tol);
            std::ostringstream v;
            v << "sweep " << s.name << " (" << to_string(sc.mode) << ") final_rel_err = " << rep.final_rel_err
              << " monotone = " << (rep.monotone ? "yes" : "no");
            cli_detail::line(os, rep.pass, v.str());
            for (const auto& w : rep.warnings) os << "WARN " << s.name << ": " << w << "\n";
            bool ok = rep.pass;
            report::json doc = {{"sweep", report::sweep(rep)}};
            if (sc.collision && !rep.rows.empty()) {
                const SweepRow& last = rep.rows.back();
                const auto cp = cross_check_prelim(s, sc.mode, last.epsilon, last.osc_dim, sc.collision_dt,
                                                   sc.collision_levels, sc.bin_dim);
                const auto cl = cross_check_limit(s, sc.mode, sc.collision_dt, sc.collision_levels, sc.bin_dim);
                for (const auto* c : {&cp, &cl}) {
                    std::ostringstream w;
                    w << "cross-check " << s.name << " " << c->label << " rel_diff = " << c->rel_diff
                      << " min_ratio = " << c->min_ratio;
                    cli_detail::line(os, c->pass, w.str());
                    ok = ok && c->pass;
                }
                doc["cross_checks"] = report::json::array({report::cross_check(cp), report::cross_check(cl)});
            }
            doc["pass"] = ok;
            out.pass = out.pass && ok;
            if (want_json) cli_detail::emit(out, dir, "sweep_" + s.name, doc);
            if (want_csv) {
                const auto path = dir / ("sweep_" + s.name + ".csv");
                report::write_file(path, report::sweep_csv(rep));
                out.artifacts.push_back(path.string());
            }
        }
        if (cfg.scenarios.empty()) os << "no scenarios configured\n";
    } else if (subcommand == "diagrams") {
        const auto checks = diagram_checks(cfg.diagrams);
        out.pass = all_pass(checks);
        body = {{"checks", report::checks(checks)}, {"pass", out.pass}};
        cli_detail::summarise(os, checks);
        if (want_json) cli_detail::emit(out, dir, "diagrams", body);
    } else {
        throw ConfigError("unknown subcommand '" + subcommand + "'");
    }
    out.summary = os.str();
    return out;
}

// Maps exceptions to exit codes: configuration and precondition problems are
// usage errors, everything numeric is 3.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
        dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const PreconditionError*>(&e) ||
        dynamic_cast<const AmbiguityError*>(&e))
        return kExitUsage;
    return kExitNumeric;
}

}  // namespace qsde_elim
