#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "qsde_elim/cli.hpp"

using namespace qsde_elim;
namespace fs = std::filesystem;

namespace {

const char* kScalar = R"({
  "version": "qsde-elim/1",
  "model": {"gamma": 4.0, "E11": [[[1.0, 0.0]]], "E10": [[[1.0, 0.0]]], "E01": [[[1.0, 0.0]]], "E00": [[[0.0, 0.0]]]}
})";

const char* kZero = R"({
  "version": "qsde-elim/1",
  "model": {"gamma": 2.0, "E11": [[[0, 0]]], "E10": [[[0, 0]]], "E01": [[[0, 0]]], "E00": [[[0, 0]]]}
})";

json spin_json() {
    return json::parse(R"({
      "version": "qsde-elim/1",
      "model": {
        "gamma": 4.0,
        "E11": [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-0.5, 0.0]]],
        "E10": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
        "E01": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
        "E00": [[[0.0, 0.0], [0.5, 0.0]], [[0.5, 0.0], [0.0, 0.0]]]
      },
      "scenarios": [{
        "name": "spin",
        "mode": "heisenberg",
        "observable": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]],
        "bra": {"v": [[1.0, 0.0], [0.0, 0.0]], "f": [{"start": 0.0, "end": 1.0, "poly": [[0.3, 0.0]]}]},
        "ket": {"v": [[1.0, 0.0], [0.0, 0.0]], "alpha": [0.5, 0.0]},
        "horizon": 1.5,
        "collision": {"enabled": false}
      }]
    })");
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qsde_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(QSDE_ELIM_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, MinimalScalarRoundTrips) {
    const Config c = parse_config_text(kScalar);
    EXPECT_EQ(c.model.dim(), 1);
    const std::string once = canonical_text(c);
    EXPECT_EQ(canonical_text(parse_config_text(once)), once);
}

TEST(Config, FullScenarioRoundTrips) {
    const std::string once = canonical_text(parse_config_json(spin_json()));
    EXPECT_EQ(canonical_text(parse_config_text(once)), once);
}

TEST(Config, RejectsMismatchedE01) {
    json j = json::parse(kScalar);
    j["model"]["E01"] = json::parse("[[[0.5, 0.0]]]");
    const std::string msg = config_error(j.dump());
    EXPECT_NE(msg.find("model.E01"), std::string::npos) << msg;
}

TEST(Config, RejectsNonDecreasingEpsilons) {
    json j = spin_json();
    j["scenarios"][0]["epsilons"] = {0.2, 0.1, 0.1, 0.025};
    const std::string msg = config_error(j.dump());
    EXPECT_NE(msg.find("scenarios[0].epsilons"), std::string::npos) << msg;
}

TEST(Config, RejectsUnknownKeysWithPath) {
    json j = spin_json();
    j["scenarios"][0]["bra"]["beta"] = 1;
    const std::string msg = config_error(j.dump());
    EXPECT_NE(msg.find("$.scenarios[0].bra.beta"), std::string::npos) << msg;
}

TEST(Config, RejectsOtherSchemaViolations) {
    json j = json::parse(kScalar);
    j["model"]["E00"] = json::parse("[[[0.0, 1.0]]]");
    EXPECT_NE(config_error(j.dump()).find("model.E00"), std::string::npos);
    j = json::parse(kScalar);
    j["model"]["E10"] = json::parse("[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]");
    EXPECT_NE(config_error(j.dump()).find("model.E10"), std::string::npos);
    j = json::parse(kScalar);
    j["model"]["E11"] = json::parse("[[[2.5, 0.0]]]");
    EXPECT_NE(config_error(j.dump()).find("model.E11"), std::string::npos);
    j = json::parse(kScalar);
    j.erase("version");
    EXPECT_NE(config_error(j.dump()).find("$.version"), std::string::npos);
    j = spin_json();
    j["scenarios"][0]["horizon"] = 1.0;  // on the jump of bra.f
    EXPECT_NE(config_error(j.dump()).find("scenarios[0]"), std::string::npos);
    EXPECT_FALSE(config_error("{not json").empty());
    EXPECT_THROW(parse_config("/nonexistent/qsde.json"), ConfigError);
}

TEST(Report, ComplexFormat) {
    const json z = report::complex(cplx(0.6, -0.8));
    EXPECT_EQ(z.dump(), R"({"im":-0.8,"re":0.6})");
}

TEST(Report, EmptySweepCsvIsHeaderOnly) {
    EXPECT_EQ(report::sweep_csv({}), "epsilon,prelim_re,prelim_im,limit_re,limit_im,abs_err,rel_err\n");
}

TEST(Report, CsvRoundTripsBitExactly) {
    ConvergenceReport r;
    SweepRow row;
    row.epsilon = 0.1;
    row.prelim_value = cplx(1.0 / 3.0, -std::exp(-1.0));
    row.limit_value = cplx(std::sqrt(2.0), 1e-300);
    row.abs_err = 2.0 / 7.0;
    row.rel_err = 5e-17;
    r.rows.push_back(row);
    const std::string csv = report::sweep_csv(r);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    std::istringstream in(csv);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    std::vector<double> parsed;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) parsed.push_back(std::strtod(cell.c_str(), nullptr));
    const std::vector<double> expect{row.epsilon, row.prelim_value.real(), row.prelim_value.imag(),
                                     row.limit_value.real(), row.limit_value.imag(), row.abs_err, row.rel_err};
    ASSERT_EQ(parsed.size(), expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(parsed[i], expect[i]);
}

TEST(Run, EliminateScalarModel) {
    const auto dir = scratch("eliminate");
    RunOptions opt;
    opt.out_dir = dir.string();
    const auto out = run(parse_config_text(kScalar), "eliminate", opt);
    EXPECT_TRUE(out.pass);
    const json doc = json::parse(slurp(dir / "eliminate.json"));
    const json& s = doc["limit"]["S"][0][0];
    EXPECT_NEAR(s["re"].get<double>(), 0.6, 1e-12);
    EXPECT_NEAR(s["im"].get<double>(), -0.8, 1e-12);
    EXPECT_EQ(doc["metadata"]["tool"], "qsde-elim");
}

TEST(Run, VerifyZeroModel) {
    const auto dir = scratch("verify");
    RunOptions opt;
    opt.out_dir = dir.string();
    const auto out = run(parse_config_text(kZero), "verify", opt);
    EXPECT_TRUE(out.pass);
    const json doc = json::parse(slurp(dir / "verify.json"));
    for (const auto& c : doc["checks"]) {
        const std::string name = c["name"];
        if (name.rfind("hp.", 0) == 0 || name.rfind("evans.", 0) == 0 || name.rfind("resummation.", 0) == 0)
            EXPECT_EQ(c["value"].get<double>(), 0.0) << name;
    }
}

TEST(Run, SweepWritesCsvWithDecreasingErrors) {
    const auto dir = scratch("sweep");
    RunOptions opt;
    opt.out_dir = dir.string();
    opt.format = "both";
    const auto out = run(parse_config_json(spin_json()), "sweep", opt);
    EXPECT_TRUE(out.pass) << out.summary;
    std::istringstream in(slurp(dir / "sweep_spin.csv"));
    std::string line;
    std::getline(in, line);
    std::vector<double> abs_err;
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        std::vector<double> cells;
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(std::strtod(cell.c_str(), nullptr));
        abs_err.push_back(cells.at(5));
    }
    ASSERT_EQ(abs_err.size(), 4u);
    for (std::size_t i = 1; i < abs_err.size(); ++i) EXPECT_LT(abs_err[i], abs_err[i - 1]);
    EXPECT_TRUE(fs::exists(dir / "sweep_spin.json"));
}

TEST(Run, ReportsAreDeterministic) {
    const Config c = parse_config_json(spin_json());
    RunOptions a, b;
    a.out_dir = scratch("det_a").string();
    b.out_dir = scratch("det_b").string();
    b.jobs = 2;
    run(c, "sweep", a);
    run(c, "sweep", b);
    EXPECT_EQ(slurp(fs::path(*a.out_dir) / "sweep_spin.json"), slurp(fs::path(*b.out_dir) / "sweep_spin.json"));
    run(c, "eliminate", a);
    run(c, "eliminate", b);
    EXPECT_EQ(slurp(fs::path(*a.out_dir) / "eliminate.json"), slurp(fs::path(*b.out_dir) / "eliminate.json"));
}

TEST(Run, FailingVerdictAndBadOptions) {
    json j = json::parse(kZero);
    j["diagrams"] = json::parse(R"({"limit_max_n": 2, "pule_max_E": 2, "omega": {"cutoff": 3, "tol": 1e-4}})");
    RunOptions opt;
    opt.out_dir = scratch("diag").string();
    EXPECT_FALSE(run(parse_config_json(j), "diagrams", opt).pass);
    j["diagrams"]["omega"]["tol"] = 10.0;
    EXPECT_TRUE(run(parse_config_json(j), "diagrams", opt).pass);
    EXPECT_THROW(run(parse_config_json(j), "plot", opt), ConfigError);
    opt.format = "xml";
    EXPECT_THROW(run(parse_config_json(j), "verify", opt), ConfigError);
}

TEST(Run, ExitCodeMapping) {
    EXPECT_EQ(exit_code_for(ConfigError("x")), kExitUsage);
    EXPECT_EQ(exit_code_for(PreconditionError("x")), kExitUsage);
    EXPECT_EQ(exit_code_for(AccuracyError("x")), kExitNumeric);
    EXPECT_EQ(exit_code_for(DivergenceError("x")), kExitNumeric);
    EXPECT_EQ(exit_code_for(CapacityError("x")), kExitNumeric);
}

TEST(Binary, ExitCodes) {
    const auto dir = scratch("binary");
    fs::create_directories(dir);
    report::write_file(dir / "zero.json", kZero);
    json bad = json::parse(kZero);
    bad["model"]["extra"] = 1;
    report::write_file(dir / "bad.json", bad.dump());
    json diag = json::parse(kZero);
    diag["diagrams"] = json::parse(R"({"limit_max_n": 2, "pule_max_E": 2, "omega": {"cutoff": 3}})");
    report::write_file(dir / "diag.json", diag.dump());
    const std::string out = " --out " + (dir / "out").string();
    EXPECT_EQ(run_binary("verify --config " + (dir / "zero.json").string() + out), 0);
    EXPECT_EQ(run_binary("diagrams --config " + (dir / "diag.json").string() + out), 1);
    EXPECT_EQ(run_binary("verify --config " + (dir / "bad.json").string() + out), 2);
    EXPECT_EQ(run_binary("verify --config " + (dir / "missing.json").string() + out), 2);
    EXPECT_EQ(run_binary("verify"), 2);
    EXPECT_EQ(run_binary("frobnicate --config x"), 2);
    EXPECT_EQ(run_binary("verify --config " + (dir / "zero.json").string() + " --format xml"), 2);
    EXPECT_EQ(run_binary("verify --config " + (dir / "zero.json").string() + " --jobs 0"), 2);
}
