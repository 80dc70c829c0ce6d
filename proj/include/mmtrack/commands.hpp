#pragma once

// Command implementations behind the CLI. Each returns a process exit status:
// 0 success, 1 property failures (verify), 2 usage, 3 library or I/O error.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mmtrack/bench.hpp"
#include "mmtrack/export.hpp"
#include "mmtrack/verify.hpp"

namespace mmtrack {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPropertyFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitError = 3;

namespace detail {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    } catch (const YAML::Exception& e) {
        err << "error: parse_error: " << e.what() << '\n';
        return kExitError;
    }
}

}  // namespace detail

/// Build the tree for a scenario file and write the policy export.
inline int cmd_plan(const std::filesystem::path& scenario_path, const std::filesystem::path& out_path, std::ostream& out,
                    std::ostream& err) {
    return detail::guarded(err, [&] {
        const Scenario s = load_scenario(scenario_path);
        const PolicyTree tree = build_tree(s);
        const BoundReport bounds = make_bound_report(tree, s, s.prune);
        write_text(out_path, dump(policy_json(tree, s, s.prune, bounds)));
        out << "minimax_value " << fmt_real(tree.minimax_value) << '\n';
        out << "root_action " << tree.root.best_child << '\n';
        out << "kept_nodes " << tree.node_count_kept << '\n';
        out << "pruned_nodes " << tree.node_count_pruned << '\n';
        out << "bound " << fmt_real(bounds.combined) << '\n';
        return kExitOk;
    });
}

/// Run a sweep; writes `out_csv` and `<stem>_summary.csv` next to it.
inline int cmd_bench(const std::filesystem::path& sweep_path, const std::filesystem::path& out_csv, bool timing,
                     std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const SweepConfig cfg = load_sweep(sweep_path);
        const auto rows = run_bench(cfg);
        std::ostringstream csv;
        write_bench_csv(csv, rows, timing);
        write_text(out_csv, csv.str());
        std::ostringstream summary;
        write_bench_summary_csv(summary, rows);
        auto summary_path = out_csv;
        summary_path.replace_filename(out_csv.stem().string() + "_summary.csv");
        write_text(summary_path, summary.str());
        out << rows.size() << " rows written to " << out_csv.string() << '\n';
        return kExitOk;
    });
}

/// Monte Carlo closed-loop runs; writes trace.csv and summary.json into out_dir.
inline int cmd_simulate(const std::filesystem::path& scenario_path, int steps, int runs, SnapMode mode,
                        const std::filesystem::path& out_dir, bool replan_every_step, std::ostream& out,
                        std::ostream& err) {
    return detail::guarded(err, [&] {
        const Scenario s = load_scenario(scenario_path);
        if (steps < 1) throw Error(ErrorCode::invalid_argument, "steps must be >= 1");
        const auto mc = run_monte_carlo(s, s.prune, steps, runs, s.seed, mode, replan_every_step);
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec) throw Error(ErrorCode::io_error, "cannot create " + out_dir.string() + ": " + ec.message());
        std::ostringstream csv;
        csv << kTraceCsvHeader << '\n';
        for (std::size_t r = 0; r < mc.traces.size(); ++r) write_trace_rows(csv, static_cast<int>(r), mc.traces[r]);
        write_text(out_dir / "trace.csv", csv.str());
        write_text(out_dir / "summary.json", dump(summary_json(mc.summary, s, steps, mode)));
        out << "mean " << fmt_real(mc.summary.mean) << " std " << fmt_real(mc.summary.stddev) << " min "
            << fmt_real(mc.summary.min) << " max " << fmt_real(mc.summary.max) << " minimax "
            << fmt_real(mc.summary.minimax_value) << '\n';
        return kExitOk;
    });
}

/// Run the named suites (all when empty), `count` cases each.
inline int cmd_verify(std::uint64_t seed, int count, const std::vector<std::string>& suites, bool inject_fault,
                      std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        if (count < 1) throw Error(ErrorCode::invalid_argument, "count must be >= 1");
        const auto& names = suites.empty() ? verify::suite_names() : suites;
        bool all_ok = true;
        for (const auto& name : names) {
            const auto r = verify::run_suite(name, seed, count, inject_fault);
            out << r.name << ": " << r.passed << " passed, " << r.failed << " failed";
            if (r.first_failing_seed) out << " (first failing seed " << *r.first_failing_seed << ": " << r.first_failure << ")";
            out << '\n';
            all_ok = all_ok && r.ok();
        }
        return all_ok ? kExitOk : kExitPropertyFailure;
    });
}

}  // namespace mmtrack
