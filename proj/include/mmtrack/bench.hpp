#pragma once

// Node-count benchmark: kept vs full tree sizes over depth and epsilon grids,
// with the planning target perturbed across sampled positions.
//
// Sweep document (YAML, schema version 1):
//
//   schema_version: 1
//   scenario: default.yaml      # relative to the sweep file
//   depths: [5, 7, 9]           # tree levels 2T + 1, odd and >= 3
//   eps1: [0, 0.1, 1]
//   eps2: [0, 0.01]
//   samples: 3                  # target positions per depth
//   sample_seed: 7
//   sample_radius: 1.0          # uniform offset of the estimate mean, per axis

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "mmtrack/bounds.hpp"
#include "mmtrack/export.hpp"
#include "mmtrack/scenario_io.hpp"

namespace mmtrack {

struct SweepConfig {
    Scenario base;
    std::vector<int> depths;
    std::vector<double> eps1{0.0};
    std::vector<double> eps2{0.0};
    int samples = 1;
    std::uint64_t sample_seed = 0;
    double sample_radius = 0.0;
};

struct BenchRow {
    int depth = 0;
    int sample = 0;
    Vec2 target;
    std::uint64_t full_nodes = 0;
    std::uint64_t kept_nodes = 0;
    std::uint64_t pruned_nodes = 0;
    double eps1 = 0.0;
    double eps2 = 0.0;
    double minimax_value = 0.0;  ///< J of the relaxed planner
    double j_star = 0.0;         ///< exact value (eps1 = eps2 = 0, same depth and sample)
    double bound = 0.0;          ///< max(eps1, B^eps2)
    double wall_time = 0.0;      ///< seconds

    /// bound - (J_relaxed - J_star); negative means the certificate was violated.
    [[nodiscard]] double slack() const { return bound - (minimax_value - j_star); }
};

namespace detail {

template <typename T, typename Fn>
std::vector<T> yaml_list(const YAML::Node& doc, const char* key, const std::string& source, Fn&& convert) {
    const YAML::Node n = doc[key];
    if (!n) yamlio::fail(ErrorCode::missing_field, source, doc, std::string("missing required field '") + key + "'");
    if (!n.IsSequence() || n.size() == 0) {
        yamlio::fail(ErrorCode::invalid_sweep, source, n, std::string(key) + " must be a non-empty list");
    }
    std::vector<T> out;
    for (const auto& item : n) out.push_back(convert(item));
    return out;
}

}  // namespace detail

inline SweepConfig parse_sweep(const std::string& text, const std::filesystem::path& source_path) {
    using namespace yamlio;
    const std::string source = source_path.string();
    YAML::Node doc;
    try {
        doc = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw Error(ErrorCode::parse_error, source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!doc.IsMap()) throw Error(ErrorCode::parse_error, source + ": document must be a mapping");
    check_keys(doc, {"schema_version", "scenario", "depths", "eps1", "eps2", "samples", "sample_seed", "sample_radius"},
               source);
    const YAML::Node version = require(doc, "schema_version", source);
    if (integer(version, source, "schema_version") != kSchemaVersion) {
        fail(ErrorCode::unsupported_schema, source, version, "unsupported schema_version");
    }

    SweepConfig cfg;
    const YAML::Node scen = require(doc, "scenario", source);
    if (!scen.IsScalar()) fail(ErrorCode::wrong_type, source, scen, "scenario must be a path");
    cfg.base = load_scenario(source_path.parent_path() / scen.as<std::string>());

    cfg.depths = detail::yaml_list<int>(doc, "depths", source, [&](const YAML::Node& n) {
        const long long d = integer(n, source, "depth");
        if (d < 3 || d % 2 == 0 || d > 129) fail(ErrorCode::invalid_sweep, source, n, "depth must be odd and in [3, 129]");
        return static_cast<int>(d);
    });
    auto eps = [&](const char* key) {
        return detail::yaml_list<double>(doc, key, source, [&](const YAML::Node& n) {
            const double v = number(n, source, key);
            if (v < 0.0) fail(ErrorCode::negative_epsilon, source, n, std::string(key) + " values must be >= 0");
            return v;
        });
    };
    if (doc["eps1"]) cfg.eps1 = eps("eps1");
    if (doc["eps2"]) cfg.eps2 = eps("eps2");
    if (const auto n = doc["samples"]) {
        const long long v = integer(n, source, "samples");
        if (v < 1 || v > 10000) fail(ErrorCode::invalid_sweep, source, n, "samples must be in [1, 10000]");
        cfg.samples = static_cast<int>(v);
    }
    if (const auto n = doc["sample_seed"]) {
        const long long v = integer(n, source, "sample_seed");
        if (v < 0) fail(ErrorCode::invalid_sweep, source, n, "sample_seed must be >= 0");
        cfg.sample_seed = static_cast<std::uint64_t>(v);
    }
    cfg.sample_radius = number_or(doc, "sample_radius", 0.0, source);
    if (cfg.sample_radius < 0.0) fail(ErrorCode::invalid_sweep, source, doc["sample_radius"], "sample_radius must be >= 0");
    return cfg;
}

inline SweepConfig load_sweep(const std::filesystem::path& path) { return parse_sweep(read_text_file(path), path); }

/// Estimate means to plan from: the base mean plus a uniform offset per axis.
inline std::vector<Vec2> sample_targets(const SweepConfig& cfg) {
    std::mt19937_64 rng(cfg.sample_seed);
    std::uniform_real_distribution<double> offset(-cfg.sample_radius, cfg.sample_radius);
    std::vector<Vec2> out;
    for (int i = 0; i < cfg.samples; ++i) {
        const double dx = cfg.sample_radius > 0.0 ? offset(rng) : 0.0;
        const double dy = cfg.sample_radius > 0.0 ? offset(rng) : 0.0;
        out.push_back(cfg.base.estimate0.mean + Vec2{dx, dy});
    }
    return out;
}

/// Rows ordered by depth, sample, eps1, eps2.
inline std::vector<BenchRow> run_bench(const SweepConfig& cfg) {
    using clock = std::chrono::steady_clock;
    std::vector<BenchRow> rows;
    const auto targets = sample_targets(cfg);
    for (int depth : cfg.depths) {
        for (int si = 0; si < cfg.samples; ++si) {
            Scenario s = cfg.base;
            s.horizon = (depth - 1) / 2;
            s.estimate0.mean = targets[static_cast<std::size_t>(si)];
            const std::uint64_t full = full_tree_size(s.motion.controls.size(), static_cast<std::uint64_t>(s.candidates), depth);

            PruneConfig exact = s.prune;
            exact.eps1 = 0.0;
            exact.eps2 = 0.0;
            const double j_star = build_tree(s, exact).minimax_value;

            for (double e1 : cfg.eps1) {
                for (double e2 : cfg.eps2) {
                    PruneConfig prune = s.prune;
                    prune.eps1 = e1;
                    prune.eps2 = e2;
                    const auto t0 = clock::now();
                    const PolicyTree tree = build_tree(s, prune);
                    const auto t1 = clock::now();
                    BenchRow r;
                    r.depth = depth;
                    r.sample = si;
                    r.target = s.estimate0.mean;
                    r.full_nodes = full;
                    r.kept_nodes = tree.node_count_kept;
                    r.pruned_nodes = tree.node_count_pruned;
                    r.eps1 = e1;
                    r.eps2 = e2;
                    r.minimax_value = tree.minimax_value;
                    r.j_star = j_star;
                    r.bound = make_bound_report(tree, s, prune).combined;
                    r.wall_time = std::chrono::duration<double>(t1 - t0).count();
                    rows.push_back(r);
                }
            }
        }
    }
    return rows;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows, bool timing) {
    out << "depth,sample,target_x,target_y,full_nodes,kept_nodes,pruned_nodes,eps1,eps2,minimax_value,J_star,"
           "J_relaxed,bound,slack";
    if (timing) out << ",wall_time";
    out << '\n';
    for (const auto& r : rows) {
        out << r.depth << ',' << r.sample << ',' << fmt_real(r.target.x) << ',' << fmt_real(r.target.y) << ','
            << r.full_nodes << ',' << r.kept_nodes << ',' << r.pruned_nodes << ',' << fmt_real(r.eps1) << ','
            << fmt_real(r.eps2) << ',' << fmt_real(r.minimax_value) << ',' << fmt_real(r.j_star) << ','
            << fmt_real(r.minimax_value) << ',' << fmt_real(r.bound) << ',' << fmt_real(r.slack());
        if (timing) out << ',' << fmt_real(r.wall_time);
        out << '\n';
    }
}

/// Mean and population standard deviation of kept nodes and value across samples.
inline void write_bench_summary_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    struct Acc {
        std::uint64_t full = 0;
        std::vector<double> kept;
        std::vector<double> value;
    };
    std::map<std::tuple<int, double, double>, Acc> groups;
    for (const auto& r : rows) {
        auto& g = groups[{r.depth, r.eps1, r.eps2}];
        g.full = r.full_nodes;
        g.kept.push_back(static_cast<double>(r.kept_nodes));
        g.value.push_back(r.minimax_value);
    }
    auto stats = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double sq = 0.0;
        for (double x : v) sq += (x - mean) * (x - mean);
        return std::pair{mean, std::sqrt(sq / static_cast<double>(v.size()))};
    };
    out << "depth,eps1,eps2,samples,full_nodes,kept_mean,kept_std,kept_fraction,value_mean,value_std\n";
    for (const auto& [key, g] : groups) {
        const auto [kept_mean, kept_std] = stats(g.kept);
        const auto [value_mean, value_std] = stats(g.value);
        out << std::get<0>(key) << ',' << fmt_real(std::get<1>(key)) << ',' << fmt_real(std::get<2>(key)) << ','
            << g.kept.size() << ',' << g.full << ',' << fmt_real(kept_mean) << ',' << fmt_real(kept_std) << ','
            << fmt_real(kept_mean / static_cast<double>(g.full)) << ',' << fmt_real(value_mean) << ','
            << fmt_real(value_std) << '\n';
    }
}

}  // namespace mmtrack
