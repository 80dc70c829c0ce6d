#pragma once

// Flat-file exports: policy trees and summaries as JSON, traces and bench rows as CSV.
// Numbers are written with 17 significant digits so files round-trip exactly;
// non-finite values (unbacked subtrees) are written as null.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "mmtrack/bounds.hpp"
#include "mmtrack/scenario_io.hpp"
#include "mmtrack/simulation.hpp"

namespace mmtrack {

using json = nlohmann::ordered_json;

inline constexpr int kExportSchemaVersion = 1;

inline std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// %.17g, with "inf"/"-inf"/"nan" for non-finite values.
inline std::string fmt_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json real_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline json vec_json(Vec2 v) { return json::array({real_json(v.x), real_json(v.y)}); }
inline json cov_json(const SymMat2& m) {
    return json::array({json::array({real_json(m.a11), real_json(m.a12)}), json::array({real_json(m.a12), real_json(m.a22)})});
}

inline json node_json(const TreeNode& n) {
    json j;
    j["kind"] = std::string(to_string(n.kind));
    j["label"] = n.label;
    j["flag"] = std::string(to_string(n.flag));
    if (!n.kept()) return j;
    j["depth"] = n.depth;
    j["robot"] = vec_json(n.robot);
    j["mean"] = vec_json(n.estimate.mean);
    j["cov"] = cov_json(n.estimate.cov);
    j["value"] = real_json(n.value);
    if (n.kind == NodeKind::measurement) {
        j["complete"] = n.complete;
        j["noise_var"] = real_json(n.noise_var);
        json cands = json::array();
        for (const auto& c : n.candidates) cands.push_back(vec_json(c));
        j["candidates"] = std::move(cands);
    }
    if (n.kind != NodeKind::leaf) {
        j["best_child"] = n.best_child;
        json kids = json::array();
        for (const auto& c : n.children) kids.push_back(node_json(c));
        j["children"] = std::move(kids);
    }
    return j;
}

/// Full-tree node count, or 0 when it does not fit in 64 bits.
inline std::uint64_t full_size_or_zero(const Scenario& s) {
    try {
        return full_tree_size(s.motion.controls.size(), static_cast<std::uint64_t>(s.candidates), 2 * s.horizon + 1);
    } catch (const Error&) {
        return 0;
    }
}

inline json policy_json(const PolicyTree& tree, const Scenario& scenario, const PruneConfig& prune,
                        const BoundReport& bounds) {
    json j;
    j["schema_version"] = kExportSchemaVersion;
    j["scenario_digest"] = hex64(tree.scenario_digest);
    j["horizon"] = tree.horizon;
    j["minimax_value"] = real_json(tree.minimax_value);
    j["root_action"] = tree.root.best_child;
    if (tree.root.best_child >= 0) {
        j["root_control"] = vec_json(scenario.motion.controls[static_cast<std::size_t>(tree.root.best_child)]);
    }
    j["prune"] = {{"eps1", prune.eps1},
                  {"eps2", prune.eps2},
                  {"alpha", prune.alpha_enabled},
                  {"redundancy", prune.redundancy_enabled},
                  {"domination", std::string(to_string(prune.domination))},
                  {"grid_resolution", prune.grid_resolution}};
    j["nodes"] = {{"kept", tree.node_count_kept},
                  {"pruned", tree.node_count_pruned},
                  {"full", full_size_or_zero(scenario)},
                  {"alpha_cutoffs", tree.alpha_cutoffs},
                  {"redundancy_prunes", tree.redundancy_prunes}};
    json traj = json::array();
    for (const auto& c : bounds.trajectory_covs) traj.push_back(cov_json(c));
    j["bounds"] = {{"eps1_bound", bounds.eps1_bound},
                   {"eps2_bound", real_json(bounds.eps2_bound)},
                   {"combined", real_json(bounds.combined)},
                   {"trajectory_covs", std::move(traj)}};
    j["tree"] = node_json(tree.root);
    return j;
}

/// Deterministic text: two-space indent, trailing newline.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    f << text;
    if (!f) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

inline constexpr const char* kTraceCsvHeader =
    "run,time,robot_x,robot_y,true_x,true_y,est_x,est_y,cov_xx,cov_xy,cov_yy,cov_trace,meas_x,meas_y,"
    "matched_candidate_index,control_x,control_y";

inline void write_trace_rows(std::ostream& out, int run, const SimTrace& trace) {
    for (const auto& r : trace.records) {
        out << run << ',' << r.time << ',' << fmt_real(r.robot.x) << ',' << fmt_real(r.robot.y) << ','
            << fmt_real(r.true_target.x) << ',' << fmt_real(r.true_target.y) << ',' << fmt_real(r.est_mean.x) << ','
            << fmt_real(r.est_mean.y) << ',' << fmt_real(r.est_cov.a11) << ',' << fmt_real(r.est_cov.a12) << ','
            << fmt_real(r.est_cov.a22) << ',' << fmt_real(r.cov_trace) << ',' << fmt_real(r.measurement.x) << ','
            << fmt_real(r.measurement.y) << ',' << r.matched_candidate_index << ',' << fmt_real(r.control_applied.x)
            << ',' << fmt_real(r.control_applied.y) << '\n';
    }
}

inline json summary_json(const MonteCarloSummary& s, const Scenario& scenario, int steps, SnapMode mode) {
    json j;
    j["schema_version"] = kExportSchemaVersion;
    j["scenario_digest"] = hex64(scenario_digest(scenario));
    j["mode"] = std::string(to_string(mode));
    j["steps"] = steps;
    j["runs"] = s.runs;
    j["mean"] = real_json(s.mean);
    j["std"] = real_json(s.stddev);
    j["min"] = real_json(s.min);
    j["max"] = real_json(s.max);
    j["minimax_value"] = real_json(s.minimax_value);
    return j;
}

}  // namespace mmtrack
