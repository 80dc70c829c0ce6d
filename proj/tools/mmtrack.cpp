#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mmtrack/commands.hpp"

// Log level comes from MMTRACK_LOG_LEVEL (trace, debug, info, warn, error, off); default warn.
static void setup_logging() {
    auto logger = spdlog::stderr_color_mt("mmtrack");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("MMTRACK_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(env));
}

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"Minimax active target tracking planner"};
    app.require_subcommand(1);

    std::string scenario, out, sweep, out_dir, mode = "snapped";
    std::vector<std::string> suites;
    int steps = 1, runs = 1, count = 100;
    std::uint64_t seed = 1;
    bool timing = false, replan = false, inject_fault = false;

    auto* plan = app.add_subcommand("plan", "build a policy tree and export it");
    plan->add_option("--scenario", scenario, "scenario YAML")->required()->check(CLI::ExistingFile);
    plan->add_option("--out", out, "policy JSON output")->required();

    auto* bench = app.add_subcommand("bench", "node-count sweep over depths and epsilons");
    bench->add_option("--sweep", sweep, "sweep YAML")->required()->check(CLI::ExistingFile);
    bench->add_option("--out", out, "rows CSV output")->required();
    bench->add_flag("--timing", timing, "add a wall_time column (not deterministic)");

    auto* sim = app.add_subcommand("simulate", "closed-loop Monte Carlo runs");
    sim->add_option("--scenario", scenario, "scenario YAML")->required()->check(CLI::ExistingFile);
    sim->add_option("--steps", steps, "steps per run")->check(CLI::PositiveNumber);
    sim->add_option("--runs", runs, "number of runs")->check(CLI::PositiveNumber);
    sim->add_option("--mode", mode, "snapped or realistic")->check(CLI::IsMember({"snapped", "realistic"}));
    sim->add_option("--out-dir", out_dir, "output directory")->required();
    sim->add_flag("--replan-every-step", replan, "rebuild the tree after every step");

    auto* ver = app.add_subcommand("verify", "randomized property suites");
    ver->add_option("--seed", seed, "base seed");
    ver->add_option("--count", count, "cases per suite")->check(CLI::PositiveNumber);
    ver->add_option("--suite", suites, "suite name (repeatable; default all)")
        ->check(CLI::IsMember(mmtrack::verify::suite_names()));
    ver->add_flag("--inject-fault", inject_fault, "flip the sign of the redundancy noise term");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mmtrack::kExitUsage;
    }

    int status = mmtrack::kExitOk;
    if (*plan) {
        spdlog::info("plan {} -> {}", scenario, out);
        status = mmtrack::cmd_plan(scenario, out, std::cout, std::cerr);
    } else if (*bench) {
        spdlog::info("bench {} -> {}", sweep, out);
        status = mmtrack::cmd_bench(sweep, out, timing, std::cout, std::cerr);
    } else if (*sim) {
        spdlog::info("simulate {} steps={} runs={} mode={}", scenario, steps, runs, mode);
        const auto snap = mode == "snapped" ? mmtrack::SnapMode::snapped : mmtrack::SnapMode::realistic;
        status = mmtrack::cmd_simulate(scenario, steps, runs, snap, out_dir, replan, std::cout, std::cerr);
    } else if (*ver) {
        spdlog::info("verify seed={} count={}{}", seed, count, inject_fault ? " (fault injected)" : "");
        status = mmtrack::cmd_verify(seed, count, suites, inject_fault, std::cout, std::cerr);
    }
    spdlog::debug("exit status {}", status);
    return status;
}
