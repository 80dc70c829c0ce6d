#pragma once

// Reference minimax by exhaustive recursion. Verification only: it shares the
// filter and candidate primitives with the planner but none of its tree,
// pruning or backup code.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "mmtrack/candidates.hpp"
#include "mmtrack/estimation.hpp"
#include "mmtrack/scenario.hpp"

namespace mmtrack::oracle {

struct Result {
    double value = 0.0;
    /// Value of each root control branch.
    std::vector<double> branch_values;
    std::uint64_t nodes = 0;
};

namespace detail {

struct Enumerator {
    const Scenario& sc;
    std::vector<std::uint32_t> path;
    std::uint64_t nodes = 0;

    double min_node(Vec2 robot, const TargetEstimate& est, int steps_left, std::vector<double>* branches) {
        ++nodes;
        if (steps_left == 0) return est.cov.trace();
        double best = std::numeric_limits<double>::infinity();
        for (std::uint32_t i = 0; i < sc.motion.controls.size(); ++i) {
            path.push_back(i);
            const double v = max_node(robot + sc.motion.controls[i], est, steps_left);
            path.pop_back();
            if (branches != nullptr) branches->push_back(v);
            best = std::min(best, v);
        }
        return best;
    }

    double max_node(Vec2 robot, const TargetEstimate& est, int steps_left) {
        ++nodes;
        const auto cands = generate_candidates(est, sc.sensor, robot, sc.candidates, sc.candidate_mode,
                                               derive_seed(sc.seed, path));
        double worst = -std::numeric_limits<double>::infinity();
        for (std::uint32_t j = 0; j < cands.points.size(); ++j) {
            path.push_back(j);
            const TargetEstimate next = kf_mean_update(est, cands.points[j], sc.target, sc.sensor, robot);
            worst = std::max(worst, min_node(robot, next, steps_left - 1, nullptr));
            path.pop_back();
        }
        return worst;
    }
};

}  // namespace detail

/// Exact minimax value of the full tree.
inline Result enumerate(const Scenario& sc) {
    detail::Enumerator e{sc, {}, 0};
    Result r;
    r.value = e.min_node(sc.robot_start, sc.estimate0, sc.horizon, &r.branch_values);
    r.nodes = e.nodes;
    return r;
}

/// Lowest-index argmin of the root branch values.
inline std::uint32_t best_root_action(const Result& r) {
    return static_cast<std::uint32_t>(std::min_element(r.branch_values.begin(), r.branch_values.end()) -
                                      r.branch_values.begin());
}

}  // namespace mmtrack::oracle
