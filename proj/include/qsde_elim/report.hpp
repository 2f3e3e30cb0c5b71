// report.hpp: JSON and CSV renderings of run results.
//
// Complex numbers are {"re": x, "im": y}. Object keys are sorted and no
// timestamps are written, so identical inputs give byte-identical files.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "qsde_elim/convergence.hpp"
#include "qsde_elim/suites.hpp"

namespace qsde_elim {

inline constexpr const char* kToolName = "qsde-elim";
inline constexpr const char* kToolVersion = "1.0.0";

namespace report {

using json = nlohmann::json;

inline json complex(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline json matrix(const Matrix& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(complex(M(r, c)));
        rows.push_back(row);
    }
    return rows;
}

// NaN and infinities become null.
inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json metadata() { return {{"tool", kToolName}, {"version", kToolVersion}}; }

inline json checks(const std::vector<Check>& cs) {
    json a = json::array();
    for (const auto& c : cs)
        a.push_back({{"name", c.name}, {"value", number(c.value)}, {"threshold", number(c.threshold)}, {"pass", c.pass}});
    return a;
}

inline json limit_model(const LimitModel& lm) {
    return {{"S", matrix(lm.S)}, {"L", matrix(lm.L)}, {"H", matrix(lm.H)}};
}

inline json evans(const EvansMatrix& ev) {
    return {{"L00", matrix(ev.L00)}, {"L01", matrix(ev.L01)}, {"L10", matrix(ev.L10)}, {"L11", matrix(ev.L11)}};
}

inline json diagnostics(const FlowDiagnostics& d) {
    return {{"steps", d.steps},
            {"est_error", number(d.est_error)},
            {"osc_top_level_weight", number(d.osc_top_level_weight)},
            {"accuracy_flag", d.accuracy_flag},
            {"truncation_flag", d.truncation_flag}};
}

inline json sweep(const ConvergenceReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"epsilon", row.epsilon},
                        {"osc_dim", static_cast<long>(row.osc_dim)},
                        {"prelim_value", complex(row.prelim_value)},
                        {"limit_value", complex(row.limit_value)},
                        {"abs_err", number(row.abs_err)},
                        {"rel_err", number(row.rel_err)},
                        {"retried", row.retried},
                        {"diagnostics", diagnostics(row.diagnostics)}});
    return {{"name", r.name},
            {"mode", to_string(r.mode)},
            {"limit_value", complex(r.limit_value)},
            {"rows", rows},
            {"slope", number(r.slope)},
            {"monotone", r.monotone},
            {"final_rel_err", number(r.final_rel_err)},
            {"target_rel_err", kSweepRelTarget},
            {"pass", r.pass},
            {"warnings", r.warnings}};
}

inline json cross_check(const CrossCheckReport& c) {
    json values = json::array();
    for (const auto& v : c.collision.values) values.push_back(complex(v));
    json ratios = json::array();
    for (double x : c.collision.ratios) ratios.push_back(number(x));
    return {{"label", c.label},
            {"flow_value", complex(c.flow_value)},
            {"dts", c.collision.dts},
            {"collision_values", values},
            {"ratios", ratios},
            {"extrapolated", complex(c.collision.extrapolated)},
            {"rel_diff", number(c.rel_diff)},
            {"min_ratio", number(c.min_ratio)},
            {"pass", c.pass}};
}

inline std::string csv_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// One row per epsilon; an empty sweep yields the header line only.
inline std::string sweep_csv(const ConvergenceReport& r) {
    std::string out = "epsilon,prelim_re,prelim_im,limit_re,limit_im,abs_err,rel_err\n";
    for (const auto& row : r.rows) {
        for (double x : {row.epsilon, row.prelim_value.real(), row.prelim_value.imag(), row.limit_value.real(),
                         row.limit_value.imag(), row.abs_err}) {
            out += csv_number(x);
            out += ',';
        }
        out += csv_number(row.rel_err);
        out += '\n';
    }
    return out;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out.flush()) throw Error("write failed for " + path.string());
}

}  // namespace report
}  // namespace qsde_elim
