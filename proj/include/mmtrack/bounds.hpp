#pragma once

// Suboptimality certificates for the relaxed planner.

#include <algorithm>
#include <span>
#include <vector>

#include "mmtrack/planner.hpp"

namespace mmtrack {

/// Covariance and noise level at one measurement step of a trajectory.
struct TrajectoryStep {
    Vec2 robot;
    SymMat2 cov;
    double noise_var = 0.0;
};

struct BoundReport {
    double eps1_bound = 0.0;
    double eps2_bound = 0.0;
    double combined = 0.0;
    std::vector<SymMat2> trajectory_covs;
};

/// Bound on J^eps1 - J* from relaxed alpha pruning: eps1 itself.
constexpr double eps1_bound(double eps1) { return eps1; }

/// Closed-loop transition F(S) = C - C K(S) H.
inline Mat2 closed_loop_factor(const SymMat2& cov, const TargetModel& target, const Mat2& obs, double noise) {
    const Mat2 gain = kalman_gain(cov, obs, noise);
    return target.dynamics - target.dynamics * gain * obs;
}

/// B^eps2 = eps2 * tr sum_{j=0..k} P_j P_j', P_j = M_{k-1} ... M_j, P_k = I,
/// with M_i = F_i(S_i) S_i evaluated along the k measurement steps of the
/// returned trajectory (S_i is the covariance the i-th Riccati step is applied
/// to, so S_i = Phi_{2i} of the starting covariance).
inline double eps2_bound(std::span<const TrajectoryStep> steps, const TargetModel& target, const SensorModel& sensor,
                         double eps2) {
    if (eps2 < 0.0) throw Error(ErrorCode::negative_epsilon, "eps2 must be >= 0");
    if (eps2 == 0.0) return 0.0;
    const std::size_t k = steps.size();
    std::vector<Mat2> factors;
    factors.reserve(k);
    for (const auto& s : steps) {
        const Mat2 obs = sensor.observation(s.robot);
        factors.push_back(closed_loop_factor(s.cov, target, obs, s.noise_var) * s.cov);
    }
    // accumulate P_j from j = k down to 0: P_k = I, P_j = P_{j+1} M_j
    Mat2 prefix = Mat2::identity();
    double total = gram(prefix).trace();
    for (std::size_t j = k; j-- > 0;) {
        prefix = prefix * factors[j];
        total += gram(prefix).trace();
    }
    return eps2 * total;
}

constexpr double combined_bound(double eps1, double b_eps2) { return std::max(eps1, b_eps2); }

/// Measurement steps along the minimax path of a built tree.
inline std::vector<TrajectoryStep> minimax_trajectory(const PolicyTree& tree) {
    std::vector<TrajectoryStep> out;
    for (const TreeNode* node : minimax_path(tree)) {
        if (node->kind == NodeKind::measurement) out.push_back({node->robot, node->estimate.cov, node->noise_var});
    }
    return out;
}

inline BoundReport make_bound_report(const PolicyTree& tree, const Scenario& scenario, const PruneConfig& prune) {
    BoundReport r;
    const auto traj = minimax_trajectory(tree);
    r.eps1_bound = eps1_bound(prune.eps1);
    r.eps2_bound = eps2_bound(traj, scenario.target, scenario.sensor, prune.eps2);
    r.combined = combined_bound(r.eps1_bound, r.eps2_bound);
    r.trajectory_covs.reserve(traj.size());
    for (const auto& s : traj) r.trajectory_covs.push_back(s.cov);
    return r;
}

}  // namespace mmtrack
