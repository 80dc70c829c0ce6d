#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "mmtrack/commands.hpp"

using namespace mmtrack;
namespace fs = std::filesystem;

namespace {

fs::path scenarios_dir() {
    const char* env = std::getenv("MMTRACK_SCENARIOS");
    return env != nullptr ? fs::path(env) : fs::path("scenarios");
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("mmtrack_test_" + std::to_string(counter_++) + "_" +
                                             std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    [[nodiscard]] const fs::path& path() const { return path_; }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

std::string slurp(const fs::path& p) { return read_text_file(p); }

void spit(const fs::path& p, const std::string& text) { write_text(p, text); }

const char* kMinimal = R"(schema_version: 1
robot_start: [0, 0]
target:
  mean: [4, 3]
  cov: [[4, 0], [0, 4]]
)";

ErrorCode code_of(const std::string& text) {
    try {
        parse_scenario(text, "doc");
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "document was accepted:\n" << text;
    return ErrorCode::invalid_argument;
}

std::string with(const std::string& extra) { return std::string(kMinimal) + extra; }

}  // namespace

TEST(LoadScenario, MinimalDocumentUsesDefaults) {
    const Scenario s = parse_scenario(kMinimal);
    EXPECT_EQ(s.motion.controls.size(), 4u);
    EXPECT_EQ(s.motion.controls[0], (Vec2{1, 0}));
    EXPECT_EQ(s.candidates, 5);
    EXPECT_EQ(s.horizon, 2);
    EXPECT_EQ(s.target_true0, s.estimate0.mean);
    EXPECT_EQ(s.sensor.range, 10.0);
}

TEST(LoadScenario, StepSizeScalesDefaultControls) {
    const Scenario s = parse_scenario(with("motion:\n  step_size: 0.5\n"));
    EXPECT_EQ(s.motion.controls[1], (Vec2{-0.5, 0}));
}

TEST(LoadScenario, RangeZeroIsRejected) {
    EXPECT_EQ(code_of(with("sensor:\n  range: 0\n")), ErrorCode::nonpositive_range);
}

TEST(LoadScenario, EveryViolationHasItsOwnCode) {
    const std::vector<std::pair<std::string, ErrorCode>> cases{
        {"robot_start: [0, 0\n", ErrorCode::parse_error},
        {"schema_version: 1\ntarget:\n  mean: [1, 1]\n  cov: [[1, 0], [0, 1]]\n", ErrorCode::missing_field},
        {"schema_version: 2\nrobot_start: [0, 0]\ntarget:\n  mean: [1, 1]\n  cov: [[1, 0], [0, 1]]\n",
         ErrorCode::unsupported_schema},
        {"schema_version: 1\nrobot_start: [0]\ntarget:\n  mean: [1, 1]\n  cov: [[1, 0], [0, 1]]\n",
         ErrorCode::wrong_type},
        {"schema_version: 1\nrobot_start: [0, 0]\ntarget:\n  mean: [1, 1]\n  cov: [[1, 2], [2, 1]]\n",
         ErrorCode::non_psd_covariance},
        {"schema_version: 1\nrobot_start: [0, 0]\ntarget:\n  mean: [1, 1]\n  cov: [[1, 0.5], [0, 1]]\n",
         ErrorCode::asymmetric_matrix},
        {with("sensor:\n  range: -1\n"), ErrorCode::nonpositive_range},
        {with("sensor:\n  ceiling: 0\n"), ErrorCode::nonpositive_ceiling},
        {with("sensor:\n  base_var: -0.1\n"), ErrorCode::negative_variance},
        {with("planner:\n  candidates: 0\n"), ErrorCode::invalid_candidate_count},
        {with("planner:\n  candidate_mode: uniform\n"), ErrorCode::unknown_mode},
        {with("prune:\n  domination: sdp\n"), ErrorCode::unknown_mode},
        {with("motion:\n  controls: []\n"), ErrorCode::empty_control_set},
        {with("prune:\n  eps1: -0.5\n"), ErrorCode::negative_epsilon},
        {with("motion:\n  step_size: 0\n"), ErrorCode::invalid_step_size},
        {with("prune:\n  grid_resolution: 0\n"), ErrorCode::invalid_grid_resolution},
        {with("planner:\n  horizon: 0\n"), ErrorCode::invalid_horizon},
        {with("sensor:\n  rnage: 3\n"), ErrorCode::unknown_field},
        {with("sensor:\n  range: .nan\n"), ErrorCode::non_finite_input},
    };
    std::set<ErrorCode> seen;
    for (const auto& [text, want] : cases) {
        EXPECT_EQ(code_of(text), want) << text;
        seen.insert(want);
    }
    EXPECT_EQ(seen.size(), 18u);
}

TEST(LoadScenario, ErrorsNameTheLine) {
    try {
        parse_scenario(with("sensor:\n  base_var: 0.5\n  ceiling: -2\n"), "file.yaml");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("file.yaml:8"), std::string::npos) << e.what();
    }
}

TEST(LoadScenario, RoundTrip) {
    Scenario s = default_scenario();
    s.target.dynamics = {0.9, 0.1 / 3.0, -0.2, 1.05};
    s.estimate0.cov = SymMat2{2.0 / 3.0, 0.1, 1.7};
    s.motion.controls.push_back({0.5, 0.5});
    s.prune.eps1 = 0.1;
    s.prune.domination = DominationMode::simplex_grid;
    s.seed = 123456789012345ULL;
    const Scenario back = parse_scenario(to_yaml(s));
    EXPECT_EQ(to_yaml(back), to_yaml(s));
    EXPECT_EQ(scenario_digest(back), scenario_digest(s));
    EXPECT_EQ(back.estimate0.cov, s.estimate0.cov);
    EXPECT_EQ(back.target.dynamics, s.target.dynamics);
    EXPECT_EQ(back.prune.domination, s.prune.domination);
    EXPECT_EQ(back.prune.eps1, s.prune.eps1);
}

TEST(LoadScenario, ShippedFilesLoad) {
    const Scenario d = load_scenario(scenarios_dir() / "default.yaml");
    EXPECT_EQ(scenario_digest(d), scenario_digest(default_scenario()));
    EXPECT_NO_THROW(load_scenario(scenarios_dir() / "tiny.yaml"));
    EXPECT_NO_THROW(load_sweep(scenarios_dir() / "sweep.yaml"));
    try {
        load_scenario(scenarios_dir() / "missing.yaml");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::io_error);
    }
}

TEST(CmdPlan, TinyScenarioWritesPolicy) {
    TempDir dir;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_plan(scenarios_dir() / "tiny.yaml", dir.path() / "p.json", out, err), kExitOk) << err.str();
    EXPECT_NE(out.str().find("minimax_value"), std::string::npos);
    const auto j = json::parse(slurp(dir.path() / "p.json"));
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["tree"]["kind"], "control");
    EXPECT_TRUE(j["tree"]["children"].is_array());
}

TEST(CmdPlan, PrunedAndUnprunedAgree) {
    TempDir dir;
    const std::string base = to_yaml(load_scenario(scenarios_dir() / "default.yaml"));
    Scenario off = parse_scenario(base);
    off.prune.alpha_enabled = false;
    off.prune.redundancy_enabled = false;
    spit(dir.path() / "on.yaml", base);
    spit(dir.path() / "off.yaml", to_yaml(off));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_plan(dir.path() / "on.yaml", dir.path() / "on.json", out, err), kExitOk);
    ASSERT_EQ(cmd_plan(dir.path() / "off.yaml", dir.path() / "off.json", out, err), kExitOk);
    const auto a = json::parse(slurp(dir.path() / "on.json"));
    const auto b = json::parse(slurp(dir.path() / "off.json"));
    EXPECT_EQ(a["minimax_value"].get<double>(), b["minimax_value"].get<double>());
    EXPECT_LT(a["nodes"]["kept"].get<int>(), b["nodes"]["kept"].get<int>());
}

TEST(CmdPlan, RefusesOverflowingUnprunedTree) {
    TempDir dir;
    spit(dir.path() / "big.yaml", with("planner:\n  horizon: 40\nprune:\n  alpha: false\n  redundancy: false\n"));
    std::ostringstream out, err;
    EXPECT_EQ(cmd_plan(dir.path() / "big.yaml", dir.path() / "big.json", out, err), kExitError);
    EXPECT_NE(err.str().find("tree_too_large"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir.path() / "big.json"));
}

TEST(CmdBench, RowsAndFullCounts) {
    TempDir dir;
    fs::copy_file(scenarios_dir() / "default.yaml", dir.path() / "default.yaml");
    spit(dir.path() / "sweep.yaml",
         "schema_version: 1\nscenario: default.yaml\ndepths: [5, 7]\neps1: [0, 0.1, 1]\neps2: [0]\nsamples: 2\n"
         "sample_seed: 3\nsample_radius: 1.5\n");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_bench(dir.path() / "sweep.yaml", dir.path() / "rows.csv", false, out, err), kExitOk) << err.str();
    const SweepConfig cfg = load_sweep(dir.path() / "sweep.yaml");
    const auto rows = run_bench(cfg);
    ASSERT_EQ(rows.size(), 2u * 2u * 3u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.full_nodes, r.depth == 5 ? 505u : 10105u);
        EXPECT_LE(r.kept_nodes + r.pruned_nodes, r.full_nodes);
        EXPECT_GE(r.slack(), -1e-9);
        if (r.eps1 == 0.0) {
            EXPECT_EQ(r.minimax_value, r.j_star);
        }
    }
    for (std::size_t i = 0; i + 2 < rows.size(); i += 3) {
        EXPECT_GE(rows[i].kept_nodes, rows[i + 1].kept_nodes);
        EXPECT_GE(rows[i + 1].kept_nodes, rows[i + 2].kept_nodes);
    }
    EXPECT_TRUE(fs::exists(dir.path() / "rows_summary.csv"));
    std::ostringstream csv;
    write_bench_csv(csv, rows, false);
    EXPECT_EQ(csv.str(), slurp(dir.path() / "rows.csv"));
}

TEST(CmdBench, RejectsBadSweep) {
    TempDir dir;
    fs::copy_file(scenarios_dir() / "tiny.yaml", dir.path() / "tiny.yaml");
    spit(dir.path() / "sweep.yaml", "schema_version: 1\nscenario: tiny.yaml\ndepths: [4]\n");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_bench(dir.path() / "sweep.yaml", dir.path() / "rows.csv", false, out, err), kExitError);
    EXPECT_NE(err.str().find("invalid_sweep"), std::string::npos);
}

TEST(CmdSimulate, SummaryAndDeterminism) {
    TempDir dir;
    std::ostringstream out, err;
    const auto scen = scenarios_dir() / "default.yaml";
    ASSERT_EQ(cmd_simulate(scen, 4, 100, SnapMode::realistic, dir.path() / "a", false, out, err), kExitOk) << err.str();
    ASSERT_EQ(cmd_simulate(scen, 4, 100, SnapMode::realistic, dir.path() / "b", false, out, err), kExitOk);
    EXPECT_EQ(slurp(dir.path() / "a" / "trace.csv"), slurp(dir.path() / "b" / "trace.csv"));
    EXPECT_EQ(slurp(dir.path() / "a" / "summary.json"), slurp(dir.path() / "b" / "summary.json"));
    const auto j = json::parse(slurp(dir.path() / "a" / "summary.json"));
    for (const char* key : {"mean", "std", "min", "max", "minimax_value", "runs"}) EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["runs"], 100);
}

TEST(CmdSimulate, SnappedSingleRunBelowMinimax) {
    TempDir dir;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_simulate(scenarios_dir() / "default.yaml", 2, 1, SnapMode::snapped, dir.path(), false, out, err),
              kExitOk);
    const auto j = json::parse(slurp(dir.path() / "summary.json"));
    EXPECT_LE(j["max"].get<double>(), j["minimax_value"].get<double>() + 1e-9);
}

TEST(CmdVerify, PassingSuitesAndFaultInjection) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_verify(1, 100, {"oracle_equivalence", "psd_closure", "monotonicity_ordered_noise"}, false, out, err),
              kExitOk)
        << out.str();
    std::ostringstream fout;
    EXPECT_EQ(cmd_verify(1, 100, {"oracle_equivalence"}, true, fout, err), kExitPropertyFailure);
    EXPECT_NE(fout.str().find("first failing seed"), std::string::npos);
    EXPECT_EQ(cmd_verify(1, 100, {"no_such_suite"}, false, fout, err), kExitError);
}
