#pragma once

// Closed-loop execution of policy trees against a simulated target.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mmtrack/planner.hpp"

namespace mmtrack {

enum class SnapMode { realistic, snapped };

constexpr std::string_view to_string(SnapMode m) { return m == SnapMode::realistic ? "realistic" : "snapped"; }

/// True target state; noise is drawn with the true robot-target distance.
class GroundTruth {
public:
    GroundTruth(Vec2 target, std::uint64_t seed) : target_(target), rng_(seed) {}

    [[nodiscard]] Vec2 position() const { return target_; }

    Vec2 measure(Vec2 robot, const SensorModel& sensor) {
        const double sd = std::sqrt(noise_variance(robot, target_, sensor));
        const Vec2 noise{sd * unit_(rng_), sd * unit_(rng_)};
        return sensor.observation(robot) * target_ + noise;
    }

    void advance(const TargetModel& model) {
        const Mat2 chol = cholesky(model.process_noise);
        const Vec2 draw{unit_(rng_), unit_(rng_)};
        target_ = model.dynamics * target_ + chol * draw;
    }

private:
    Vec2 target_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> unit_{0.0, 1.0};
};

struct SimRecord {
    int time = 0;
    Vec2 robot;
    Vec2 true_target;  ///< at measurement time
    Vec2 est_mean;     ///< after filtering, propagated to the next step
    SymMat2 est_cov;
    double cov_trace = 0.0;
    Vec2 measurement;  ///< value fed to the filter
    int matched_candidate_index = -1;
    Vec2 control_applied;
};

struct SimTrace {
    std::vector<SimRecord> records;
    /// Minimax value of each tree built during the run, in build order.
    std::vector<double> plan_values;

    [[nodiscard]] double final_trace() const { return records.empty() ? 0.0 : records.back().cov_trace; }
};

struct SimOptions {
    int steps = 1;
    std::uint64_t seed = 0;
    SnapMode mode = SnapMode::snapped;
    /// Rebuild after every step instead of once the horizon is consumed.
    bool replan_every_step = false;
};

/// Index of the candidate nearest to z in Euclidean distance, lowest index on ties.
inline std::size_t closest_candidate(Vec2 z, std::span<const Vec2> candidates) {
    if (candidates.empty()) throw Error(ErrorCode::invalid_argument, "candidate set is empty");
    std::size_t best = 0;
    double best_d = distance(z, candidates[0]);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double d = distance(z, candidates[i]);
        if (d < best_d) {
            best = i;
            best_d = d;
        }
    }
    return best;
}

inline std::size_t closest_candidate(Vec2 z, const CandidateSet& candidates) {
    return closest_candidate(z, std::span<const Vec2>(candidates.points));
}

inline Scenario replanned(const Scenario& base, Vec2 robot, const TargetEstimate& est) {
    Scenario s = base;
    s.robot_start = robot;
    s.estimate0 = est;
    return s;
}

/// Execute the policy: apply the root control, measure, filter, descend through
/// the nearest candidate, and rebuild the tree from the current state when it is
/// exhausted. `initial` may supply an already built tree for the start state.
inline SimTrace run_closed_loop(const Scenario& scenario, const PruneConfig& prune, const SimOptions& opt,
                                const PolicyTree* initial = nullptr) {
    if (opt.steps < 1) throw Error(ErrorCode::invalid_argument, "steps must be >= 1");
    SimTrace trace;
    trace.records.reserve(static_cast<std::size_t>(opt.steps));

    Vec2 robot = scenario.robot_start;
    TargetEstimate est = scenario.estimate0;
    GroundTruth truth(scenario.target_true0, opt.seed);

    std::optional<PolicyTree> owned;
    const PolicyTree* tree = initial;
    const TreeNode* node = nullptr;
    int used = 0;

    for (int t = 0; t < opt.steps; ++t) {
        const bool exhausted =
            node == nullptr || node->kind == NodeKind::leaf || node->best_child < 0 || used == scenario.horizon;
        if (exhausted || opt.replan_every_step) {
            if (t > 0 || tree == nullptr) {
                owned.emplace(build_tree(replanned(scenario, robot, est), prune));
                tree = &*owned;
            }
            trace.plan_values.push_back(tree->minimax_value);
            node = &tree->root;
            used = 0;
        }
        if (node->best_child < 0) throw Error(ErrorCode::no_policy, "tree root has no complete control branch");
        const auto action = static_cast<std::size_t>(node->best_child);
        const TreeNode& meas = node->children[action];
        const Vec2 u = scenario.motion.controls[action];
        robot = apply_control(robot, u, scenario.motion);

        SimRecord rec;
        rec.time = t + 1;
        rec.robot = robot;
        rec.control_applied = u;
        rec.true_target = truth.position();
        const Vec2 z = truth.measure(robot, scenario.sensor);
        const std::size_t match = closest_candidate(z, meas.candidates);
        rec.matched_candidate_index = static_cast<int>(match);
        rec.measurement = opt.mode == SnapMode::snapped ? meas.candidates[match] : z;
        est = kf_mean_update(est, rec.measurement, scenario.target, scenario.sensor, robot);
        truth.advance(scenario.target);

        rec.est_mean = est.mean;
        rec.est_cov = est.cov;
        rec.cov_trace = est.cov.trace();
        trace.records.push_back(rec);

        node = &meas.children[match];
        ++used;
    }
    return trace;
}

struct MonteCarloSummary {
    int runs = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    double minimax_value = 0.0;
};

struct MonteCarloResult {
    MonteCarloSummary summary;
    std::vector<SimTrace> traces;
};

/// Runs seeds base_seed .. base_seed + num_runs - 1 and summarises the final
/// covariance trace (population standard deviation).
inline MonteCarloResult run_monte_carlo(const Scenario& scenario, const PruneConfig& prune, int steps, int num_runs,
                                        std::uint64_t base_seed, SnapMode mode, bool replan_every_step = false) {
    if (num_runs < 1) throw Error(ErrorCode::invalid_argument, "num_runs must be >= 1");
    const PolicyTree first = build_tree(scenario, prune);
    MonteCarloResult out;
    out.traces.reserve(static_cast<std::size_t>(num_runs));
    for (int r = 0; r < num_runs; ++r) {
        const SimOptions opt{steps, base_seed + static_cast<std::uint64_t>(r), mode, replan_every_step};
        out.traces.push_back(run_closed_loop(scenario, prune, opt, &first));
    }
    auto& s = out.summary;
    s.runs = num_runs;
    s.minimax_value = first.minimax_value;
    s.min = kInf;
    s.max = -kInf;
    double sum = 0.0;
    for (const auto& tr : out.traces) {
        const double v = tr.final_trace();
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean = sum / num_runs;
    double sq = 0.0;
    for (const auto& tr : out.traces) sq += (tr.final_trace() - s.mean) * (tr.final_trace() - s.mean);
    s.stddev = std::sqrt(sq / num_runs);
    return out;
}

}  // namespace mmtrack
