// config.hpp: JSON run configuration: parsing with field-path diagnostics,
// validation and a canonical serialisation.
//
// {
//   "version": "qsde-elim/1",
//   "model": {"gamma": 2.0, "E11": [[[re, im], ...], ...], "E10": ..., "E01": ..., "E00": ...},
//   "scenarios": [{"name": "...", "mode": "unitary|heisenberg|weyl", "horizon": 1.0,
//                  "epsilons": [...], "osc_dims": [...],
//                  "bra": {"v": [[re, im], ...], "alpha": [re, im], "f": [segment, ...]},
//                  "ket": {...}, "observable": matrix, "weyl": [segment, ...],
//                  "collision": {"enabled": true, "dt": 4e-4, "levels": 3, "bin_dim": 2}}],
//   "verify": {"wick_cases": 50, "wick_max_n": 6, "seed": 1},
//   "diagrams": {...},
//   "output": {"dir": "out", "format": "json|csv|both"},
//   "tolerances": {"rel": 1e-9, "abs": 1e-12}
// }
// A segment is {"start": a, "end": b, "poly": [[re, im], ...]} with the
// polynomial in the local variable t - a. Only "version" and "model" are
// required; everything else has defaults.

#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsde_elim/convergence.hpp"
#include "qsde_elim/suites.hpp"

namespace qsde_elim {

using json = nlohmann::json;

inline constexpr const char* kConfigVersion = "qsde-elim/1";

struct ScenarioConfig {
    Scenario scenario;
    SweepMode mode = SweepMode::unitary;
    bool collision = true;
    double collision_dt = 4e-4;
    int collision_levels = 3;
    int bin_dim = 2;
};

struct VerifyConfig {
    int wick_cases = 50;
    int wick_max_n = 6;
    unsigned seed = 1;
};

struct Config {
    std::string version = kConfigVersion;
    PrelimModel model;
    std::vector<ScenarioConfig> scenarios;
    VerifyConfig verify;
    DiagramSuiteConfig diagrams;
    std::string out_dir = "out";
    std::string format = "json";
    FlowTolerances tol;
};

namespace cfg {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) fail(path + "." + it.key(), "unknown key");
}

inline const json* find(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline const json& require(const json& j, const char* key, const std::string& path) {
    const json* p = find(j, key);
    if (!p) fail(path + "." + key, "missing required key");
    return *p;
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) fail(path, "must be finite");
    return x;
}

inline int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

inline std::string string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

inline cplx complex(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) fail(path, "expected [re, im]");
    return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

inline Vector vector(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty list of [re, im]");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = complex(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

inline Matrix matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty list of rows");
    const std::size_t n = j.size();
    Matrix M(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || j[r].size() != n) fail(rp, "matrix must be square (" + std::to_string(n) + " columns)");
        for (std::size_t c = 0; c < n; ++c) M(r, c) = complex(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
    return M;
}

inline RegulatedFunction regulated(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected a list of segments");
    std::vector<Segment> segs;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string sp = path + "[" + std::to_string(i) + "]";
        check_keys(j[i], sp, {"start", "end", "poly"});
        Segment s;
        s.start = number(require(j[i], "start", sp), sp + ".start");
        s.end = number(require(j[i], "end", sp), sp + ".end");
        const json& poly = require(j[i], "poly", sp);
        if (!poly.is_array()) fail(sp + ".poly", "expected a list of [re, im]");
        for (std::size_t k = 0; k < poly.size(); ++k)
            s.poly.push_back(complex(poly[k], sp + ".poly[" + std::to_string(k) + "]"));
        segs.push_back(std::move(s));
    }
    try {
        return RegulatedFunction::from_segments(std::move(segs));
    } catch (const Error& e) {
        fail(path, e.what());
    }
}

inline ExponentialVectorSpec vector_spec(const json& j, const std::string& path, Eigen::Index d) {
    check_keys(j, path, {"v", "alpha", "f"});
    ExponentialVectorSpec s;
    s.v = vector(require(j, "v", path), path + ".v");
    if (s.v.size() != d) fail(path + ".v", "length " + std::to_string(s.v.size()) + " does not match model dimension " +
                                               std::to_string(d));
    if (const json* a = find(j, "alpha")) s.alpha = complex(*a, path + ".alpha");
    if (std::norm(s.alpha) > 50.0) fail(path + ".alpha", "|alpha|^2 must not exceed 50");
    if (const json* f = find(j, "f")) s.f = regulated(*f, path + ".f");
    return s;
}

inline PrelimModel model(const json& j, const std::string& path) {
    check_keys(j, path, {"gamma", "E11", "E10", "E01", "E00"});
    PrelimModel m;
    m.gamma = number(require(j, "gamma", path), path + ".gamma");
    if (!(m.gamma > 0.0)) fail(path + ".gamma", "must be > 0");
    m.E11 = matrix(require(j, "E11", path), path + ".E11");
    m.E10 = matrix(require(j, "E10", path), path + ".E10");
    m.E01 = matrix(require(j, "E01", path), path + ".E01");
    m.E00 = matrix(require(j, "E00", path), path + ".E00");
    const Eigen::Index d = m.E11.rows();
    for (auto [name, M] : {std::pair{"E10", &m.E10}, {"E01", &m.E01}, {"E00", &m.E00}})
        if (M->rows() != d) fail(path + "." + name, "dimension differs from E11");
    const auto rep = validate_prelim(m);
    if (rep.herm_E11 >= 1e-12) fail(path + ".E11", "must be Hermitian (residual " + std::to_string(rep.herm_E11) + ")");
    if (rep.herm_E00 >= 1e-12) fail(path + ".E00", "must be Hermitian (residual " + std::to_string(rep.herm_E00) + ")");
    if (rep.pair_E01 >= 1e-12) fail(path + ".E01", "must equal E10^dagger (residual " + std::to_string(rep.pair_E01) + ")");
    if (!(rep.margin > 0.0)) fail(path + ".E11", "norm must be below gamma/2 (margin " + std::to_string(rep.margin) + ")");
    return m;
}

inline ScenarioConfig scenario(const json& j, const std::string& path, const PrelimModel& m) {
    check_keys(j, path,
               {"name", "mode", "horizon", "epsilons", "osc_dims", "bra", "ket", "observable", "weyl", "collision"});
    ScenarioConfig sc;
    Scenario& s = sc.scenario;
    s.prelim = m;
    const Eigen::Index d = m.dim();
    s.name = string(require(j, "name", path), path + ".name");
    if (s.name.empty() || s.name.find_first_of("/\\ ") != std::string::npos)
        fail(path + ".name", "must be non-empty without spaces or slashes");
    if (const json* x = find(j, "mode")) {
        try {
            sc.mode = parse_sweep_mode(string(*x, path + ".mode"));
        } catch (const ParameterError& e) {
            fail(path + ".mode", e.what());
        }
    }
    if (const json* x = find(j, "horizon")) s.horizon = number(*x, path + ".horizon");
    if (!(s.horizon > 0.0)) fail(path + ".horizon", "must be > 0");
    if (const json* x = find(j, "epsilons")) {
        if (!x->is_array() || x->empty()) fail(path + ".epsilons", "expected a non-empty list");
        s.epsilons.clear();
        for (std::size_t i = 0; i < x->size(); ++i) s.epsilons.push_back(number((*x)[i], path + ".epsilons"));
    }
    for (std::size_t i = 0; i < s.epsilons.size(); ++i) {
        if (!(s.epsilons[i] > 0.0)) fail(path + ".epsilons", "entries must be positive");
        if (i > 0 && !(s.epsilons[i] < s.epsilons[i - 1])) fail(path + ".epsilons", "must be strictly decreasing");
    }
    if (const json* x = find(j, "osc_dims")) {
        if (!x->is_array()) fail(path + ".osc_dims", "expected a list");
        s.osc_dims.clear();
        for (std::size_t i = 0; i < x->size(); ++i) s.osc_dims.push_back(integer((*x)[i], path + ".osc_dims"));
    }
    if (s.osc_dims.size() != s.epsilons.size()) fail(path + ".osc_dims", "needs one entry per epsilon");
    for (auto n : s.osc_dims)
        if (n < 4 || n * d > kMaxFlowDim) fail(path + ".osc_dims", "entries must satisfy 4 <= n and d * n <= 256");
    s.bra = s.ket = basis_spec(d, 0);
    if (const json* x = find(j, "bra")) s.bra = vector_spec(*x, path + ".bra", d);
    if (const json* x = find(j, "ket")) s.ket = vector_spec(*x, path + ".ket", d);
    if (const json* x = find(j, "observable")) {
        s.X = matrix(*x, path + ".observable");
        if (s.X->rows() != d) fail(path + ".observable", "dimension differs from the model");
    }
    if (const json* x = find(j, "weyl")) s.g = regulated(*x, path + ".weyl");
    if (const json* x = find(j, "collision")) {
        const std::string cp = path + ".collision";
        check_keys(*x, cp, {"enabled", "dt", "levels", "bin_dim"});
        if (const json* y = find(*x, "enabled")) {
            if (!y->is_boolean()) fail(cp + ".enabled", "expected true or false");
            sc.collision = y->get<bool>();
        }
        if (const json* y = find(*x, "dt")) sc.collision_dt = number(*y, cp + ".dt");
        if (const json* y = find(*x, "levels")) sc.collision_levels = integer(*y, cp + ".levels");
        if (const json* y = find(*x, "bin_dim")) sc.bin_dim = integer(*y, cp + ".bin_dim");
        if (!(sc.collision_dt > 0.0) || s.horizon / sc.collision_dt > 1e6) fail(cp + ".dt", "must satisfy 0 < dt, t/dt <= 1e6");
        if (sc.collision_levels < 3 || sc.collision_levels > 6) fail(cp + ".levels", "must be in 3..6");
        if (sc.bin_dim != 2 && sc.bin_dim != 3) fail(cp + ".bin_dim", "must be 2 or 3");
    }
    try {
        validate_scenario(s, sc.mode);
    } catch (const Error& e) {
        fail(path, e.what());
    }
    return sc;
}

inline std::vector<double> number_list(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline DiagramSuiteConfig diagrams(const json& j, const std::string& path) {
    check_keys(j, path,
               {"gamma", "t_grid", "eps_grid", "pule_max_E", "limit_max_n", "limit_eps_factors", "limit_t", "omega"});
    DiagramSuiteConfig c;
    if (const json* x = find(j, "gamma")) c.gamma = number(*x, path + ".gamma");
    if (const json* x = find(j, "t_grid")) c.t_grid = number_list(*x, path + ".t_grid");
    if (const json* x = find(j, "eps_grid")) c.eps_grid = number_list(*x, path + ".eps_grid");
    if (const json* x = find(j, "pule_max_E")) c.pule_max_E = integer(*x, path + ".pule_max_E");
    if (const json* x = find(j, "limit_max_n")) c.limit_max_n = integer(*x, path + ".limit_max_n");
    if (const json* x = find(j, "limit_eps_factors")) c.limit_eps_factors = number_list(*x, path + ".limit_eps_factors");
    if (const json* x = find(j, "limit_t")) c.limit_t = number(*x, path + ".limit_t");
    if (const json* x = find(j, "omega")) {
        const std::string op = path + ".omega";
        check_keys(*x, op, {"C", "C11", "t", "cutoff", "tol"});
        if (const json* y = find(*x, "C")) c.omega.C = number(*y, op + ".C");
        if (const json* y = find(*x, "C11")) c.omega.C11 = number(*y, op + ".C11");
        if (const json* y = find(*x, "t")) c.omega.t = number(*y, op + ".t");
        if (const json* y = find(*x, "cutoff")) c.omega_cutoff = integer(*y, op + ".cutoff");
        if (const json* y = find(*x, "tol")) c.omega_tol = number(*y, op + ".tol");
        if (!(c.omega.C11 >= 0.0 && c.omega.C11 < 2.0)) fail(op + ".C11", "must lie in [0, 2)");
        if (c.omega_cutoff < 1 || c.omega_cutoff > 40) fail(op + ".cutoff", "must be in 1..40");
    }
    if (!(c.gamma > 0.0)) fail(path + ".gamma", "must be > 0");
    if (c.pule_max_E < 1 || c.pule_max_E > kMaxSimplexOrder) fail(path + ".pule_max_E", "must be in 1..6");
    if (c.limit_max_n < 1 || c.limit_max_n > kMaxSimplexOrder) fail(path + ".limit_max_n", "must be in 1..6");
    for (double e : c.eps_grid)
        if (!(e > 0.0)) fail(path + ".eps_grid", "entries must be positive");
    return c;
}

}  // namespace cfg

inline Config parse_config_json(const json& j) {
    cfg::check_keys(j, "$", {"version", "model", "scenarios", "verify", "diagrams", "output", "tolerances"});
    Config c;
    c.version = cfg::string(cfg::require(j, "version", "$"), "$.version");
    if (c.version != kConfigVersion) cfg::fail("$.version", "unsupported version '" + c.version + "'");
    c.model = cfg::model(cfg::require(j, "model", "$"), "$.model");
    if (const json* x = cfg::find(j, "scenarios")) {
        if (!x->is_array()) cfg::fail("$.scenarios", "expected a list");
        std::set<std::string> names;
        for (std::size_t i = 0; i < x->size(); ++i) {
            const std::string p = "$.scenarios[" + std::to_string(i) + "]";
            c.scenarios.push_back(cfg::scenario((*x)[i], p, c.model));
            if (!names.insert(c.scenarios.back().scenario.name).second) cfg::fail(p + ".name", "duplicate name");
        }
    }
    if (const json* x = cfg::find(j, "verify")) {
        cfg::check_keys(*x, "$.verify", {"wick_cases", "wick_max_n", "seed"});
        if (const json* y = cfg::find(*x, "wick_cases")) c.verify.wick_cases = cfg::integer(*y, "$.verify.wick_cases");
        if (const json* y = cfg::find(*x, "wick_max_n")) c.verify.wick_max_n = cfg::integer(*y, "$.verify.wick_max_n");
        if (const json* y = cfg::find(*x, "seed")) c.verify.seed = static_cast<unsigned>(cfg::integer(*y, "$.verify.seed"));
        if (c.verify.wick_cases < 0) cfg::fail("$.verify.wick_cases", "must be >= 0");
        if (c.verify.wick_max_n < 1 || c.verify.wick_max_n > 8) cfg::fail("$.verify.wick_max_n", "must be in 1..8");
    }
    if (const json* x = cfg::find(j, "diagrams")) c.diagrams = cfg::diagrams(*x, "$.diagrams");
    if (const json* x = cfg::find(j, "output")) {
        cfg::check_keys(*x, "$.output", {"dir", "format"});
        if (const json* y = cfg::find(*x, "dir")) c.out_dir = cfg::string(*y, "$.output.dir");
        if (const json* y = cfg::find(*x, "format")) c.format = cfg::string(*y, "$.output.format");
        if (c.format != "json" && c.format != "csv" && c.format != "both")
            cfg::fail("$.output.format", "must be json, csv or both");
    }
    if (const json* x = cfg::find(j, "tolerances")) {
        cfg::check_keys(*x, "$.tolerances", {"rel", "abs"});
        if (const json* y = cfg::find(*x, "rel")) c.tol.rel = cfg::number(*y, "$.tolerances.rel");
        if (const json* y = cfg::find(*x, "abs")) c.tol.abs = cfg::number(*y, "$.tolerances.abs");
        if (!(c.tol.rel > 0.0) || !(c.tol.abs > 0.0)) cfg::fail("$.tolerances", "must be positive");
    }
    return c;
}

inline Config parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("$: invalid JSON: ") + e.what());
    }
    return parse_config_json(j);
}

inline Config parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// ----------------------------------------------------------- canonical form

namespace cfg {

inline json pair(cplx z) { return json::array({z.real(), z.imag()}); }

inline json vector_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(pair(v(i)));
    return a;
}

inline json matrix_json(const Matrix& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(pair(M(r, c)));
        rows.push_back(row);
    }
    return rows;
}

inline json regulated_json(const RegulatedFunction& f) {
    json segs = json::array();
    for (const auto& s : f.segments()) {
        json poly = json::array();
        for (const auto& c : s.poly) poly.push_back(pair(c));
        segs.push_back({{"start", s.start}, {"end", s.end}, {"poly", poly}});
    }
    return segs;
}

inline json spec_json(const ExponentialVectorSpec& s) {
    return {{"v", vector_json(s.v)}, {"alpha", pair(s.alpha)}, {"f", regulated_json(s.f)}};
}

}  // namespace cfg

inline json canonical_json(const Config& c) {
    json j;
    j["version"] = c.version;
    j["model"] = {{"gamma", c.model.gamma},
                  {"E11", cfg::matrix_json(c.model.E11)},
                  {"E10", cfg::matrix_json(c.model.E10)},
                  {"E01", cfg::matrix_json(c.model.E01)},
                  {"E00", cfg::matrix_json(c.model.E00)}};
    json scs = json::array();
    for (const auto& sc : c.scenarios) {
        const Scenario& s = sc.scenario;
        json o = {{"name", s.name},
                  {"mode", to_string(sc.mode)},
                  {"horizon", s.horizon},
                  {"epsilons", s.epsilons},
                  {"bra", cfg::spec_json(s.bra)},
                  {"ket", cfg::spec_json(s.ket)},
                  {"collision",
                   {{"enabled", sc.collision}, {"dt", sc.collision_dt}, {"levels", sc.collision_levels},
                    {"bin_dim", sc.bin_dim}}}};
        json dims = json::array();
        for (auto n : s.osc_dims) dims.push_back(static_cast<int>(n));
        o["osc_dims"] = dims;
        if (s.X) o["observable"] = cfg::matrix_json(*s.X);
        if (s.g) o["weyl"] = cfg::regulated_json(*s.g);
        scs.push_back(o);
    }
    j["scenarios"] = scs;
    j["verify"] = {{"wick_cases", c.verify.wick_cases}, {"wick_max_n", c.verify.wick_max_n}, {"seed", c.verify.seed}};
    const auto& d = c.diagrams;
    j["diagrams"] = {{"gamma", d.gamma},
                     {"t_grid", d.t_grid},
                     {"eps_grid", d.eps_grid},
                     {"pule_max_E", d.pule_max_E},
                     {"limit_max_n", d.limit_max_n},
                     {"limit_eps_factors", d.limit_eps_factors},
                     {"limit_t", d.limit_t},
                     {"omega",
                      {{"C", d.omega.C}, {"C11", d.omega.C11}, {"t", d.omega.t}, {"cutoff", d.omega_cutoff},
                       {"tol", d.omega_tol}}}};
    j["output"] = {{"dir", c.out_dir}, {"format", c.format}};
    j["tolerances"] = {{"rel", c.tol.rel}, {"abs", c.tol.abs}};
    return j;
}

inline std::string canonical_text(const Config& c) { return canonical_json(c).dump(2) + "\n"; }

}  // namespace qsde_elim
