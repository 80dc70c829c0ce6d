#pragma once

// Randomized property suites. Case i of a run with base seed s uses seed s + i,
// so any reported failure replays with `verify --seed <failing seed> --count 1`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mmtrack/bounds.hpp"
#include "mmtrack/oracle.hpp"

namespace mmtrack::verify {

inline constexpr double kTolerance = 1e-9;

struct SuiteResult {
    std::string name;
    int passed = 0;
    int failed = 0;
    std::optional<std::uint64_t> first_failing_seed;
    std::string first_failure;

    [[nodiscard]] bool ok() const { return failed == 0; }
};

namespace detail {

class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin() { return integer(0, 1) == 1; }
    std::uint64_t bits() { return rng_(); }

    /// L L' with a random lower-triangular L.
    SymMat2 psd(double diag_lo, double diag_hi, double off) {
        const Mat2 l{uniform(diag_lo, diag_hi), 0.0, uniform(-off, off), uniform(diag_lo, diag_hi)};
        return gram(l);
    }

    Mat2 rotation_scale(double max_angle, double scale_lo, double scale_hi) {
        const double th = uniform(-max_angle, max_angle);
        const double sc = uniform(scale_lo, scale_hi);
        return {sc * std::cos(th), -sc * std::sin(th), sc * std::sin(th), sc * std::cos(th)};
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

}  // namespace detail

/// Small scenario (T <= 3, n <= 4, k <= 3) for oracle comparisons.
inline Scenario random_small_scenario(std::uint64_t seed) {
    detail::Sampler r(seed);
    Scenario s;
    s.horizon = r.integer(1, 3);
    const double steps[] = {0.5, 1.0, 2.0};
    const double e = steps[r.integer(0, 2)];
    auto moves = MotionModel::axis_moves(e);
    std::shuffle(moves.controls.begin(), moves.controls.end(), r.engine());
    moves.controls.resize(static_cast<std::size_t>(r.integer(1, 4)));
    s.motion = moves;
    s.candidates = r.integer(1, 3);
    s.candidate_mode = r.coin() ? CandidateMode::seeded_gaussian : CandidateMode::deterministic_quantile;
    s.robot_start = {static_cast<double>(r.integer(-3, 3)), static_cast<double>(r.integer(-3, 3))};
    s.estimate0.mean = {r.uniform(-5.0, 5.0), r.uniform(-5.0, 5.0)};
    s.estimate0.cov = r.psd(0.3, 2.0, 1.0);
    s.target_true0 = s.estimate0.mean + Vec2{r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0)};
    s.target.dynamics = r.rotation_scale(0.3, 0.8, 1.2);
    s.target.process_noise = r.psd(0.0, 0.45, 0.2);
    s.sensor.obs_matrix = Mat2::identity();
    s.sensor.base_var = r.uniform(0.1, 1.0);
    s.sensor.slope_var = r.uniform(0.0, 1.0);
    s.sensor.range = r.uniform(2.0, 10.0);
    s.sensor.ceiling = r.uniform(1.0, 5.0);
    s.seed = r.bits();
    return s;
}

/// Inputs of one Riccati monotonicity trial.
struct MonotonePair {
    SymMat2 cov_a;
    SymMat2 cov_b;
    double s_a = 0.0;
    double s_b = 0.0;
    TargetModel model;
    SensorModel sensor;
};

/// Rejection-samples a pair satisfying the comparison's preconditions. With
/// `ordered_noise` the pair additionally has s_a >= s_b.
inline MonotonePair random_monotone_pair(std::uint64_t seed, bool ordered_noise) {
    detail::Sampler r(seed);
    MonotonePair p;
    p.model.dynamics = r.rotation_scale(0.5, 0.5, 1.5);
    p.model.process_noise = r.psd(0.0, 0.5, 0.3);
    p.sensor.base_var = r.uniform(0.0, 1.0);
    p.sensor.slope_var = r.uniform(0.0, 1.0);
    p.sensor.ceiling = r.uniform(1.0, 5.0);
    const double cap = p.sensor.max_variance();
    const Mat2& obs = p.sensor.obs_matrix;
    for (;;) {
        p.cov_b = r.psd(0.1, 2.0, 1.0);
        p.cov_a = p.cov_b + r.psd(0.0, 1.5, 1.0);
        p.s_a = r.uniform(0.0, cap);
        p.s_b = r.uniform(0.0, cap);
        if (ordered_noise && p.s_a < p.s_b) std::swap(p.s_a, p.s_b);
        if (psd_dominates(innovation_covariance(p.cov_a, obs, p.s_a), innovation_covariance(p.cov_b, obs, p.s_b), 0.0)) {
            return p;
        }
    }
}

namespace detail {

inline SuiteResult run_cases(const std::string& name, std::uint64_t seed, int count,
                             const std::function<std::optional<std::string>(std::uint64_t)>& one) {
    SuiteResult out;
    out.name = name;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t case_seed = seed + static_cast<std::uint64_t>(i);
        std::optional<std::string> failure;
        try {
            failure = one(case_seed);
        } catch (const Error& e) {
            failure = std::string("error: ") + e.what();
        }
        if (failure) {
            ++out.failed;
            if (!out.first_failing_seed) {
                out.first_failing_seed = case_seed;
                out.first_failure = *failure;
            }
        } else {
            ++out.passed;
        }
    }
    return out;
}

inline std::string num(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

inline std::string describe(const char* what, double got, double lo, double hi) {
    std::ostringstream ss;
    ss.precision(17);
    ss << what << " = " << got << " outside [" << lo << ", " << hi << "]";
    return ss.str();
}

inline std::optional<std::string> sandwich(const Scenario& s, const PruneConfig& prune, double eps1_weight,
                                           bool use_eps2_bound) {
    const double j_star = oracle::enumerate(s).value;
    const PolicyTree tree = build_tree(s, prune);
    double bound = eps1_weight * prune.eps1;
    if (use_eps2_bound) {
        const auto traj = minimax_trajectory(tree);
        bound = combined_bound(bound, eps2_bound(traj, s.target, s.sensor, prune.eps2));
    }
    const double gap = tree.minimax_value - j_star;
    if (!(gap >= -kTolerance && gap <= bound + kTolerance)) return describe("J_relaxed - J_star", gap, 0.0, bound);
    return std::nullopt;
}

}  // namespace detail

/// rho(S_A) >= rho(S_B) for pairs satisfying the stated preconditions.
inline SuiteResult monotonicity(std::uint64_t seed, int count) {
    return detail::run_cases("monotonicity", seed, count, [](std::uint64_t cs) -> std::optional<std::string> {
        const auto p = random_monotone_pair(cs, false);
        if (check_riccati_monotone(p.cov_a, p.cov_b, p.s_a, p.s_b, p.model, p.sensor)) return std::nullopt;
        std::ostringstream ss;
        ss.precision(6);
        ss << "rho(A) - rho(B) not PSD (s_a=" << p.s_a << ", s_b=" << p.s_b << ")";
        return ss.str();
    });
}

/// Same comparison restricted to s_A >= s_B.
inline SuiteResult monotonicity_ordered_noise(std::uint64_t seed, int count) {
    return detail::run_cases("monotonicity_ordered_noise", seed, count,
                             [](std::uint64_t cs) -> std::optional<std::string> {
                                 const auto p = random_monotone_pair(cs, true);
                                 if (check_riccati_monotone(p.cov_a, p.cov_b, p.s_a, p.s_b, p.model, p.sensor)) {
                                     return std::nullopt;
                                 }
                                 return "rho(A) - rho(B) not PSD";
                             });
}

/// riccati_step output stays PSD.
inline SuiteResult psd_closure(std::uint64_t seed, int count) {
    return detail::run_cases("psd_closure", seed, count, [](std::uint64_t cs) -> std::optional<std::string> {
        detail::Sampler r(cs);
        TargetModel model;
        model.dynamics = {r.uniform(-2.0, 2.0), r.uniform(-2.0, 2.0), r.uniform(-2.0, 2.0), r.uniform(-2.0, 2.0)};
        model.process_noise = r.coin() ? SymMat2::zero() : r.psd(0.0, 1.0, 1.0);
        SensorModel sensor;
        sensor.obs_matrix = {r.uniform(-2.0, 2.0), r.uniform(-2.0, 2.0), r.uniform(-2.0, 2.0), r.uniform(-2.0, 2.0)};
        sensor.base_var = r.uniform(1e-3, 2.0);
        sensor.slope_var = r.uniform(0.0, 2.0);
        sensor.range = r.uniform(0.5, 20.0);
        sensor.ceiling = r.uniform(0.5, 10.0);
        const double scale = std::pow(10.0, r.uniform(-3.0, 3.0));
        const SymMat2 cov = scale * r.psd(0.0, 2.0, 2.0);
        const Vec2 robot{r.uniform(-20.0, 20.0), r.uniform(-20.0, 20.0)};
        const Vec2 est{r.uniform(-20.0, 20.0), r.uniform(-20.0, 20.0)};
        const SymMat2 next = riccati_step(cov, model, sensor, robot, est);
        const double lo = next.min_eigenvalue();
        if (lo >= -kPsdTolerance) return std::nullopt;
        return detail::describe("min eigenvalue", lo, -kPsdTolerance, kInf);
    });
}

/// Pruned planner (eps = 0) matches exhaustive enumeration.
inline SuiteResult oracle_equivalence(std::uint64_t seed, int count, bool inject_fault = false) {
    return detail::run_cases("oracle_equivalence", seed, count, [inject_fault](std::uint64_t cs) -> std::optional<std::string> {
        const Scenario s = random_small_scenario(cs);
        PruneConfig prune;
        prune.fault_flip_noise_term = inject_fault;
        const double j_star = oracle::enumerate(s).value;
        const double got = build_tree(s, prune).minimax_value;
        if (std::abs(got - j_star) <= kTolerance) return std::nullopt;
        return detail::describe("planner value", got, j_star, j_star);
    });
}

inline const std::vector<double>& eps1_grid() {
    static const std::vector<double> g{0.01, 0.1, 1.0};
    return g;
}

inline const std::vector<double>& eps2_grid() {
    static const std::vector<double> g{0.01, 0.1};
    return g;
}

/// 0 <= J^eps1 - J* <= eps1 for every eps1 in the grid.
inline SuiteResult eps1_sandwich(std::uint64_t seed, int count, bool inject_fault = false) {
    return detail::run_cases("eps1_sandwich", seed, count, [inject_fault](std::uint64_t cs) -> std::optional<std::string> {
        const Scenario s = random_small_scenario(cs);
        for (double e1 : eps1_grid()) {
            PruneConfig prune;
            prune.eps1 = e1;
            prune.fault_flip_noise_term = inject_fault;
            if (auto f = detail::sandwich(s, prune, 1.0, false)) return "eps1=" + detail::num(e1) + ": " + *f;
        }
        return std::nullopt;
    });
}

/// 0 <= J^eps2 - J* <= B^eps2 for every eps2 in the grid.
inline SuiteResult eps2_sandwich(std::uint64_t seed, int count, bool inject_fault = false) {
    return detail::run_cases("eps2_sandwich", seed, count, [inject_fault](std::uint64_t cs) -> std::optional<std::string> {
        const Scenario s = random_small_scenario(cs);
        for (double e2 : eps2_grid()) {
            PruneConfig prune;
            prune.eps2 = e2;
            prune.fault_flip_noise_term = inject_fault;
            if (auto f = detail::sandwich(s, prune, 0.0, true)) return "eps2=" + detail::num(e2) + ": " + *f;
        }
        return std::nullopt;
    });
}

/// 0 <= J^{eps1,eps2} - J* <= max(eps1, B^eps2).
inline SuiteResult combined_sandwich(std::uint64_t seed, int count, bool inject_fault = false) {
    return detail::run_cases("combined_sandwich", seed, count, [inject_fault](std::uint64_t cs) -> std::optional<std::string> {
        const Scenario s = random_small_scenario(cs);
        for (double e1 : eps1_grid()) {
            for (double e2 : eps2_grid()) {
                PruneConfig prune;
                prune.eps1 = e1;
                prune.eps2 = e2;
                prune.fault_flip_noise_term = inject_fault;
                if (auto f = detail::sandwich(s, prune, 1.0, true)) {
                    return "eps1=" + detail::num(e1) + " eps2=" + detail::num(e2) + ": " + *f;
                }
            }
        }
        return std::nullopt;
    });
}

/// Whenever the pairwise test prunes, the simplex-grid test prunes too.
inline SuiteResult pairwise_conservative(std::uint64_t seed, int count) {
    return detail::run_cases("pairwise_conservative", seed, count, [](std::uint64_t cs) -> std::optional<std::string> {
        detail::Sampler r(cs);
        SensorModel sensor;
        sensor.base_var = r.uniform(0.0, 0.3);
        sensor.slope_var = r.uniform(0.0, 0.1);
        sensor.ceiling = 1.0;
        const int k_remaining = r.integer(0, 2);
        PeerRecord self{{0, 0, 1}, {1.0, 1.0}, r.psd(0.5, 3.0, 2.0)};
        std::vector<PeerRecord> peers;
        const int n_peers = r.integer(1, 6);
        for (int i = 0; i < n_peers; ++i) {
            peers.push_back({{static_cast<std::uint32_t>(i + 1), 0, 0}, {1.0, 1.0}, r.psd(0.1, 2.0, 2.0)});
        }
        PruneConfig pair;
        pair.eps2 = r.uniform(0.0, 0.5);
        PruneConfig grid = pair;
        grid.domination = DominationMode::simplex_grid;
        grid.grid_resolution = r.integer(1, 12);
        const bool p = redundancy_prunable(self, peers, k_remaining, sensor, pair);
        const bool g = redundancy_prunable(self, peers, k_remaining, sensor, grid);
        if (!p || g) return std::nullopt;
        return "pairwise prunes but simplex_grid (resolution " + std::to_string(grid.grid_resolution) + ") does not";
    });
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"monotonicity",      "monotonicity_ordered_noise", "psd_closure",
                                                "oracle_equivalence", "eps1_sandwich",             "eps2_sandwich",
                                                "combined_sandwich",  "pairwise_conservative"};
    return names;
}

inline SuiteResult run_suite(const std::string& name, std::uint64_t seed, int count, bool inject_fault = false) {
    if (name == "monotonicity") return monotonicity(seed, count);
    if (name == "monotonicity_ordered_noise") return monotonicity_ordered_noise(seed, count);
    if (name == "psd_closure") return psd_closure(seed, count);
    if (name == "oracle_equivalence") return oracle_equivalence(seed, count, inject_fault);
    if (name == "eps1_sandwich") return eps1_sandwich(seed, count, inject_fault);
    if (name == "eps2_sandwich") return eps2_sandwich(seed, count, inject_fault);
    if (name == "combined_sandwich") return combined_sandwich(seed, count, inject_fault);
    if (name == "pairwise_conservative") return pairwise_conservative(seed, count);
    throw Error(ErrorCode::invalid_argument, "unknown suite '" + name + "'");
}

}  // namespace mmtrack::verify
