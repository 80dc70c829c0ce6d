#pragma once

#include <cstdint>
#include <string_view>

#include "mmtrack/candidates.hpp"
#include "mmtrack/estimation.hpp"

namespace mmtrack {

enum class DominationMode { pairwise, simplex_grid };

constexpr std::string_view to_string(DominationMode m) {
    return m == DominationMode::pairwise ? "pairwise" : "simplex_grid";
}

/// Pruning knobs. eps1 relaxes the alpha cutoff, eps2 the redundancy test.
struct PruneConfig {
    double eps1 = 0.0;
    double eps2 = 0.0;
    DominationMode domination = DominationMode::pairwise;
    int grid_resolution = 10;
    bool alpha_enabled = true;
    bool redundancy_enabled = true;

    /// Test hook for `verify`: subtracts the horizon noise term in the
    /// redundancy condition instead of adding it. Never set in normal use.
    bool fault_flip_noise_term = false;

    static PruneConfig disabled() {
        PruneConfig p;
        p.alpha_enabled = false;
        p.redundancy_enabled = false;
        return p;
    }
};

struct Scenario {
    Vec2 robot_start;
    TargetEstimate estimate0{{0.0, 0.0}, SymMat2::identity()};
    Vec2 target_true0;
    MotionModel motion = MotionModel::axis_moves(1.0);
    TargetModel target;
    SensorModel sensor;
    int horizon = 2;
    int candidates = 5;
    CandidateMode candidate_mode = CandidateMode::deterministic_quantile;
    PruneConfig prune;
    std::uint64_t seed = 0;
    /// Refuse to grow a pruned tree beyond this many kept nodes.
    std::uint64_t node_budget = 20'000'000;

    [[nodiscard]] int n_controls() const { return static_cast<int>(motion.controls.size()); }
};

/// Four axis moves, five Gaussian candidates, slowly drifting target ahead of the robot.
inline Scenario default_scenario() {
    Scenario s;
    s.robot_start = {0.0, 0.0};
    s.estimate0 = {{4.0, 3.0}, SymMat2::diag(4.0, 4.0)};
    s.target_true0 = {5.0, 2.0};
    s.motion = MotionModel::axis_moves(1.0);
    s.target.dynamics = Mat2::identity();
    s.target.process_noise = SymMat2::diag(0.05, 0.05);
    s.sensor.obs_matrix = Mat2::identity();
    s.sensor.base_var = 0.5;
    s.sensor.slope_var = 1.0;
    s.sensor.range = 10.0;
    s.sensor.ceiling = 5.0;
    s.horizon = 2;
    s.candidates = 5;
    s.candidate_mode = CandidateMode::seeded_gaussian;
    s.seed = 1;
    return s;
}

}  // namespace mmtrack
