#pragma once

// Minimax policy tree over robot controls (min) and candidate measurements
// (max), with alpha pruning and state-dependent algebraic-redundancy pruning.
//
// Levels alternate: depth 0 is a control node holding the start state; a
// control edge moves the robot and yields a measurement node; a measurement
// edge applies one candidate measurement through the filter and yields the
// next control node. Depth 2T holds the leaves, valued trace(cov).
//
// Pruning never touches an adversary choice inside an evaluated measurement
// node. A measurement node that stops early (alpha cutoff, or a redundant
// child) is marked incomplete and its control parent ignores it when taking
// the minimum, so pruning can only remove options from the minimiser.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mmtrack/candidates.hpp"
#include "mmtrack/estimation.hpp"
#include "mmtrack/scenario.hpp"

namespace mmtrack {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Trees with pruning disabled are only materialised up to this many nodes.
inline constexpr std::uint64_t kMaterializeLimit = 1'000'000;

enum class NodeKind : std::uint8_t { control, measurement, leaf };
enum class PruneFlag : std::uint8_t { kept, alpha_pruned, redundancy_pruned };

constexpr std::string_view to_string(NodeKind k) {
    switch (k) {
        case NodeKind::control: return "control";
        case NodeKind::measurement: return "measurement";
        case NodeKind::leaf: return "leaf";
    }
    return "?";
}

constexpr std::string_view to_string(PruneFlag f) {
    switch (f) {
        case PruneFlag::kept: return "kept";
        case PruneFlag::alpha_pruned: return "alpha_pruned";
        case PruneFlag::redundancy_pruned: return "redundancy_pruned";
    }
    return "?";
}

struct TreeNode {
    NodeKind kind = NodeKind::control;
    PruneFlag flag = PruneFlag::kept;
    /// Measurement nodes: every candidate child was expanded.
    bool complete = true;
    std::uint16_t depth = 0;
    /// Control index for measurement nodes, candidate index for control/leaf nodes.
    std::uint32_t label = 0;
    Vec2 robot;
    TargetEstimate estimate;
    /// Measurement nodes: noise variance used for their filter update.
    double noise_var = 0.0;
    /// Backed-up minimax value: trace at leaves, min over complete children at
    /// control nodes, max over expanded children at measurement nodes.
    double value = kInf;
    /// Certified lower bound on the unpruned minimax value of this subtree.
    double lower_bound = -kInf;
    /// Argmin (control) or argmax (measurement) child, lowest index on ties.
    std::int32_t best_child = -1;
    std::vector<Vec2> candidates;
    std::vector<TreeNode> children;

    [[nodiscard]] bool kept() const { return flag == PruneFlag::kept; }
};

struct PolicyTree {
    TreeNode root;
    double minimax_value = kInf;
    std::uint64_t node_count_kept = 0;
    std::uint64_t node_count_pruned = 0;
    std::uint64_t redundancy_prunes = 0;
    std::uint64_t alpha_cutoffs = 0;
    std::uint64_t scenario_digest = 0;
    int horizon = 0;
};

/// Number of nodes in the unpruned tree with `levels` levels: 1, n, nk, n^2 k, ...
inline std::uint64_t full_tree_size(std::uint64_t n, std::uint64_t k, int levels) {
    if (n < 1 || k < 1 || levels < 1) throw Error(ErrorCode::invalid_argument, "full_tree_size needs n, k, levels >= 1");
    std::uint64_t level_count = 1;
    std::uint64_t total = 1;
    for (int level = 1; level < levels; ++level) {
        const std::uint64_t branch = (level % 2 == 1) ? n : k;
        if (__builtin_mul_overflow(level_count, branch, &level_count) ||
            __builtin_add_overflow(total, level_count, &total)) {
            throw Error(ErrorCode::size_overflow, "full tree size overflows 64 bits");
        }
    }
    return total;
}

/// Relaxed alpha test: the subtree cannot beat the best completed alternative by more than eps1.
constexpr bool alpha_cutoff(double best_so_far, double subtree_value_lower_bound, double eps1) {
    return subtree_value_lower_bound >= best_so_far - eps1;
}

/// What the redundancy test needs to know about a node.
struct PeerRecord {
    std::vector<std::uint32_t> path;  ///< child indices from the root
    Vec2 robot;
    SymMat2 cov;
};

/// Depth of the lowest common ancestor of two nodes given by root paths.
inline std::size_t lca_depth(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    const auto [ia, ib] = std::mismatch(a.begin(), a.end(), b.begin(), b.end());
    return static_cast<std::size_t>(ia - a.begin());
}

namespace detail {

template <typename Fn>
bool any_composition(int parts, int total, std::vector<int>& buf, Fn&& fn) {
    if (parts == 1) {
        buf.push_back(total);
        const bool hit = fn(std::span<const int>(buf));
        buf.pop_back();
        return hit;
    }
    for (int first = total; first >= 0; --first) {
        buf.push_back(first);
        const bool hit = any_composition(parts - 1, total - first, buf, fn);
        buf.pop_back();
        if (hit) return true;
    }
    return false;
}

/// Is lhs >= sum_i alpha_i rhs_i for some alpha on the grid {m / resolution}?
inline bool grid_dominates(const SymMat2& lhs, std::span<const SymMat2> rhs, int resolution) {
    std::vector<int> buf;
    return any_composition(static_cast<int>(rhs.size()), resolution, buf, [&](std::span<const int> w) {
        SymMat2 mix = SymMat2::zero();
        for (std::size_t i = 0; i < rhs.size(); ++i) mix = mix + (static_cast<double>(w[i]) / resolution) * rhs[i];
        return psd_dominates(lhs, mix, 0.0);
    });
}

}  // namespace detail

/// Largest peer set searched on the simplex grid; bigger sets use indicator
/// weights only.
inline constexpr std::size_t kGridMaxPeers = 4;

/// Is lhs >= sum_i alpha_i rhs_i for admissible convex weights alpha?
inline bool dominated_by_mixture(const SymMat2& lhs, std::span<const SymMat2> rhs, const PruneConfig& prune) {
    for (const auto& r : rhs) {
        if (psd_dominates(lhs, r, 0.0)) return true;
    }
    if (prune.domination == DominationMode::pairwise || rhs.size() < 2 || rhs.size() > kGridMaxPeers) return false;
    return detail::grid_dominates(lhs, rhs, prune.grid_resolution);
}

/// Signed K * a term of the redundancy condition.
inline double redundancy_noise_term(int remaining_meas_steps, const SensorModel& sensor, const PruneConfig& prune) {
    const double term = static_cast<double>(remaining_meas_steps) * sensor.max_variance();
    return prune.fault_flip_noise_term ? -term : term;
}

/// State-dependent algebraic redundancy test for `candidate` against `peers`
/// with K measurement levels remaining:
///   1. every peer has exactly the candidate's robot position,
///   2. every peer's lowest common ancestor with the candidate is a control node,
///   3. H (S_A + eps2 I) H' >= sum_i alpha_i [H S_i H' + K a I], a = max sensor variance,
///      for convex weights alpha (indicator vectors in pairwise mode, a grid of
///      the simplex in simplex_grid mode with at most kGridMaxPeers peers).
inline bool redundancy_prunable(const PeerRecord& candidate, std::span<const PeerRecord> peers, int remaining_meas_steps,
                                const SensorModel& sensor, const PruneConfig& prune) {
    if (peers.empty()) return false;
    for (const auto& peer : peers) {
        if (!(peer.robot == candidate.robot)) return false;
        if (peer.path.size() != candidate.path.size()) return false;
        const std::size_t lca = lca_depth(peer.path, candidate.path);
        if (lca == candidate.path.size() || lca % 2 != 0) return false;
    }

    const Mat2 obs = sensor.observation(candidate.robot);
    const double term = redundancy_noise_term(remaining_meas_steps, sensor, prune);
    const SymMat2 lhs = congruence(obs, candidate.cov + SymMat2::scaled_identity(prune.eps2));
    std::vector<SymMat2> rhs;
    rhs.reserve(peers.size());
    for (const auto& peer : peers) rhs.push_back(congruence(obs, peer.cov) + SymMat2::scaled_identity(term));
    return dominated_by_mixture(lhs, rhs, prune);
}

/// Stable 64-bit fingerprint of every model parameter in a scenario.
inline std::uint64_t scenario_digest(const Scenario& s) {
    std::uint64_t h = 0x6d6d747261636bULL;
    auto feed = [&h](auto v) {
        std::uint64_t bits = 0;
        if constexpr (std::is_floating_point_v<decltype(v)>) {
            bits = std::bit_cast<std::uint64_t>(static_cast<double>(v));
        } else {
            bits = static_cast<std::uint64_t>(v);
        }
        h = mix64(h ^ bits);
    };
    auto feed_vec = [&](Vec2 v) { feed(v.x); feed(v.y); };
    auto feed_sym = [&](const SymMat2& m) { feed(m.a11); feed(m.a12); feed(m.a22); };
    auto feed_mat = [&](const Mat2& m) { feed(m.a); feed(m.b); feed(m.c); feed(m.d); };
    feed_vec(s.robot_start);
    feed_vec(s.estimate0.mean);
    feed_sym(s.estimate0.cov);
    feed_vec(s.target_true0);
    feed(s.motion.step_size);
    for (const auto& u : s.motion.controls) feed_vec(u);
    feed_mat(s.target.dynamics);
    feed_sym(s.target.process_noise);
    feed_mat(s.sensor.obs_matrix);
    feed(s.sensor.base_var);
    feed(s.sensor.slope_var);
    feed(s.sensor.range);
    feed(s.sensor.ceiling);
    feed(s.horizon);
    feed(s.candidates);
    feed(static_cast<int>(s.candidate_mode));
    feed(s.seed);
    return h;
}

namespace detail {

struct PositionKey {
    std::uint64_t x;
    std::uint64_t y;
    friend bool operator==(const PositionKey&, const PositionKey&) = default;
};

struct PositionKeyHash {
    std::size_t operator()(const PositionKey& k) const noexcept {
        return static_cast<std::size_t>(mix64(k.x ^ mix64(k.y)));
    }
};

class TreeBuilder {
    struct Peer {
        std::vector<std::uint32_t> path;
        SymMat2 projected;  ///< H S H'
    };

public:
    TreeBuilder(const Scenario& scenario, const PruneConfig& prune)
        : sc_(scenario), pr_(prune), leaf_depth_(2 * scenario.horizon),
          registry_(static_cast<std::size_t>(2 * scenario.horizon + 1)) {}

    PolicyTree build() {
        PolicyTree tree;
        tree.horizon = sc_.horizon;
        tree.scenario_digest = scenario_digest(sc_);
        TreeNode& root = tree.root;
        root.kind = NodeKind::control;
        root.robot = sc_.robot_start;
        root.estimate = sc_.estimate0;
        count_kept();
        expand_control(root, kInf);
        tree.minimax_value = root.value;
        tree.node_count_kept = kept_;
        tree.node_count_pruned = pruned_;
        tree.redundancy_prunes = redundancy_prunes_;
        tree.alpha_cutoffs = alpha_cutoffs_;
        return tree;
    }

private:
    void count_kept() {
        if (++kept_ > sc_.node_budget) {
            throw Error(ErrorCode::node_budget_exceeded, "tree exceeded the node budget of " + std::to_string(sc_.node_budget));
        }
    }

    static PositionKey key(Vec2 p) {
        // +0.0 and -0.0 compare equal as positions, so normalise the sign of zero
        return {std::bit_cast<std::uint64_t>(p.x + 0.0), std::bit_cast<std::uint64_t>(p.y + 0.0)};
    }

    /// `bound` is the smallest completed value of any control ancestor: a
    /// subtree certified to be worth at least bound - eps1 cannot improve on it.
    void expand_control(TreeNode& node, double bound) {
        if (node.depth == leaf_depth_) {
            node.kind = NodeKind::leaf;
            node.value = node.estimate.cov.trace();
            node.lower_bound = node.value;
            return;
        }
        node.value = kInf;
        node.lower_bound = kInf;
        const auto& controls = sc_.motion.controls;
        node.children.reserve(controls.size());
        for (std::uint32_t i = 0; i < controls.size(); ++i) {
            TreeNode m;
            m.kind = NodeKind::measurement;
            m.depth = static_cast<std::uint16_t>(node.depth + 1);
            m.label = i;
            m.robot = apply_control(node.robot, controls[i], sc_.motion);
            m.estimate = node.estimate;
            m.noise_var = noise_variance(m.robot, m.estimate.mean, sc_.sensor);
            count_kept();
            path_.push_back(i);
            expand_measurement(m, std::min(bound, node.value));
            path_.pop_back();
            node.lower_bound = std::min(node.lower_bound, m.lower_bound);
            if (m.complete && m.value < node.value) {
                node.value = m.value;
                node.best_child = static_cast<std::int32_t>(i);
            }
            node.children.push_back(std::move(m));
        }
    }

    void stub_remaining(TreeNode& m, std::uint32_t from, NodeKind kind, PruneFlag flag) {
        for (auto j = from; j < static_cast<std::uint32_t>(sc_.candidates); ++j) {
            TreeNode stub;
            stub.kind = kind;
            stub.flag = flag;
            stub.depth = static_cast<std::uint16_t>(m.depth + 1);
            stub.label = j;
            stub.robot = m.robot;
            m.children.push_back(std::move(stub));
            ++pruned_;
        }
        m.complete = false;
    }

    /// Registers c as a peer unless it is redundant with respect to the
    /// already registered nodes at its depth and position.
    bool redundant(const TreeNode& c) {
        const int remaining = (leaf_depth_ - c.depth) / 2;
        auto& bucket = registry_[c.depth][key(c.robot)];
        const Mat2 obs = sc_.sensor.observation(c.robot);
        const SymMat2 term = SymMat2::scaled_identity(redundancy_noise_term(remaining, sc_.sensor, pr_));
        const SymMat2 lhs = congruence(obs, c.estimate.cov + SymMat2::scaled_identity(pr_.eps2));
        auto eligible = [this](const Peer& peer) {
            const std::size_t lca = lca_depth(peer.path, path_);
            return lca % 2 == 0 && lca < path_.size();
        };
        if (pr_.domination == DominationMode::pairwise) {
            for (const auto& peer : bucket) {
                if (psd_dominates(lhs, peer.projected + term, 0.0) && eligible(peer)) return true;
            }
        } else {
            scratch_.clear();
            for (const auto& peer : bucket) {
                if (eligible(peer)) scratch_.push_back(peer.projected + term);
            }
            if (dominated_by_mixture(lhs, scratch_, pr_)) return true;
        }
        bucket.push_back({path_, congruence(obs, c.estimate.cov)});
        return false;
    }

    void expand_measurement(TreeNode& m, double bound) {
        m.candidates = generate_candidates(m.estimate, sc_.sensor, m.robot, sc_.candidates, sc_.candidate_mode,
                                           derive_seed(sc_.seed, path_))
                           .points;
        m.value = -kInf;
        m.lower_bound = -kInf;
        const auto child_depth = static_cast<std::uint16_t>(m.depth + 1);
        const NodeKind child_kind = child_depth == leaf_depth_ ? NodeKind::leaf : NodeKind::control;
        const auto k = static_cast<std::uint32_t>(sc_.candidates);
        m.children.reserve(k);
        for (std::uint32_t j = 0; j < k; ++j) {
            TreeNode c;
            c.kind = child_kind;
            c.depth = child_depth;
            c.label = j;
            c.robot = m.robot;
            c.estimate = kf_mean_update(m.estimate, m.candidates[j], sc_.target, sc_.sensor, m.robot);
            path_.push_back(j);
            if (child_kind == NodeKind::control && pr_.redundancy_enabled && redundant(c)) {
                path_.pop_back();
                c.flag = PruneFlag::redundancy_pruned;
                ++pruned_;
                ++redundancy_prunes_;
                m.children.push_back(std::move(c));
                stub_remaining(m, j + 1, child_kind, PruneFlag::redundancy_pruned);
                return;
            }
            count_kept();
            expand_control(c, bound);
            path_.pop_back();
            m.lower_bound = std::max(m.lower_bound, c.lower_bound);
            if (c.value > m.value) {
                m.value = c.value;
                m.best_child = static_cast<std::int32_t>(j);
            }
            m.children.push_back(std::move(c));
            if (pr_.alpha_enabled && j + 1 < k && bound < kInf && alpha_cutoff(bound, m.lower_bound, pr_.eps1)) {
                ++alpha_cutoffs_;
                stub_remaining(m, j + 1, child_kind, PruneFlag::alpha_pruned);
                return;
            }
        }
    }

    const Scenario& sc_;
    const PruneConfig& pr_;
    int leaf_depth_;
    std::vector<std::uint32_t> path_;
    std::vector<std::unordered_map<PositionKey, std::vector<Peer>, PositionKeyHash>> registry_;
    std::vector<SymMat2> scratch_;
    std::uint64_t kept_ = 0;
    std::uint64_t pruned_ = 0;
    std::uint64_t redundancy_prunes_ = 0;
    std::uint64_t alpha_cutoffs_ = 0;
};

}  // namespace detail

/// Depth-first construction of the policy tree to depth 2T.
inline PolicyTree build_tree(const Scenario& scenario, const PruneConfig& prune) {
    if (scenario.horizon < 1) throw Error(ErrorCode::invalid_horizon, "horizon must be >= 1");
    if (scenario.motion.controls.empty()) throw Error(ErrorCode::empty_control_set, "control set is empty");
    if (scenario.candidates < 1) throw Error(ErrorCode::invalid_candidate_count, "candidate count must be >= 1");
    if (prune.eps1 < 0.0 || prune.eps2 < 0.0) throw Error(ErrorCode::negative_epsilon, "eps1 and eps2 must be >= 0");
    if (!prune.alpha_enabled && !prune.redundancy_enabled) {
        std::uint64_t full = 0;
        try {
            full = full_tree_size(scenario.motion.controls.size(), static_cast<std::uint64_t>(scenario.candidates),
                                  2 * scenario.horizon + 1);
        } catch (const Error&) {
            throw Error(ErrorCode::tree_too_large, "unpruned tree size overflows; refusing to enumerate");
        }
        if (full > kMaterializeLimit) {
            throw Error(ErrorCode::tree_too_large,
                        "unpruned tree has " + std::to_string(full) + " nodes; refusing to enumerate");
        }
    }
    return detail::TreeBuilder(scenario, prune).build();
}

inline PolicyTree build_tree(const Scenario& scenario) { return build_tree(scenario, scenario.prune); }

/// Robot decision per reachable control node, keyed by the node's root path.
struct Policy {
    std::uint32_t root_action = 0;
    std::map<std::vector<std::uint32_t>, std::uint32_t> actions;
};

namespace detail {

inline void collect_policy(const TreeNode& node, std::vector<std::uint32_t>& path, Policy& out) {
    if (node.kind != NodeKind::control || !node.kept() || node.best_child < 0) return;
    out.actions.emplace(path, static_cast<std::uint32_t>(node.best_child));
    for (const auto& m : node.children) {
        if (!m.kept() || !m.complete) continue;
        path.push_back(m.label);
        for (const auto& c : m.children) {
            path.push_back(c.label);
            collect_policy(c, path, out);
            path.pop_back();
        }
        path.pop_back();
    }
}

}  // namespace detail

/// For every control node below a complete measurement node, its minimising
/// control; the root entry is the first action to execute.
inline Policy extract_policy(const PolicyTree& tree) {
    if (tree.root.best_child < 0) throw Error(ErrorCode::no_policy, "root has no complete control branch");
    Policy out;
    out.root_action = static_cast<std::uint32_t>(tree.root.best_child);
    std::vector<std::uint32_t> path;
    detail::collect_policy(tree.root, path, out);
    return out;
}

/// Root-to-leaf path following the minimiser at control nodes and the
/// maximiser at measurement nodes.
inline std::vector<const TreeNode*> minimax_path(const PolicyTree& tree) {
    std::vector<const TreeNode*> out;
    const TreeNode* node = &tree.root;
    while (node != nullptr) {
        out.push_back(node);
        if (node->best_child < 0 || node->children.empty()) break;
        node = &node->children[static_cast<std::size_t>(node->best_child)];
    }
    return out;
}

}  // namespace mmtrack
