#include <functional>

#include <gtest/gtest.h>

#include "mmtrack/oracle.hpp"
#include "mmtrack/planner.hpp"
#include "mmtrack/verify.hpp"

using namespace mmtrack;

namespace {

Scenario chain_scenario() {
    Scenario s = default_scenario();
    s.motion.controls = {{1.0, 0.0}};
    s.horizon = 1;
    s.candidates = 1;
    return s;
}

Scenario small_scenario(int horizon, int n, int k) {
    Scenario s = default_scenario();
    s.horizon = horizon;
    s.motion.controls.resize(static_cast<std::size_t>(n));
    s.candidates = k;
    return s;
}

void walk(const TreeNode& n, const std::function<void(const TreeNode&)>& fn) {
    fn(n);
    for (const auto& c : n.children) walk(c, fn);
}

}  // namespace

TEST(FullTreeSize, PaperCounts) {
    EXPECT_EQ(full_tree_size(4, 5, 5), 505u);
    EXPECT_EQ(full_tree_size(4, 5, 13), 80'842'105u);
    EXPECT_EQ(full_tree_size(1, 1, 7), 7u);
    EXPECT_EQ(full_tree_size(2, 2, 5), 31u);
}

TEST(FullTreeSize, OverflowAndBadInput) {
    try {
        full_tree_size(4, 5, 200);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::size_overflow);
    }
    EXPECT_THROW(full_tree_size(0, 5, 3), Error);
    EXPECT_THROW(full_tree_size(4, 5, 0), Error);
}

TEST(AlphaCutoff, SpecExamples) {
    EXPECT_TRUE(alpha_cutoff(10, 12, 0));
    EXPECT_FALSE(alpha_cutoff(10, 9, 0));
    EXPECT_TRUE(alpha_cutoff(10, 9.5, 1));
    EXPECT_TRUE(alpha_cutoff(10, 10, 0));
}

TEST(Redundancy, DominatedByOnePeer) {
    SensorModel s;
    s.base_var = 2.0;
    s.slope_var = 0.0;
    const PeerRecord a{{0, 0, 1}, {1, 0}, SymMat2::scaled_identity(6)};
    const PeerRecord b{{1, 0, 0}, {1, 0}, SymMat2::identity()};
    EXPECT_TRUE(redundancy_prunable(a, std::vector{b}, 1, s, PruneConfig{}));
}

TEST(Redundancy, EqualCovarianceNeverPrunes) {
    SensorModel s;
    const SymMat2 cov{2, 0.3, 1};
    const PeerRecord a{{0, 0, 1}, {1, 0}, cov};
    const PeerRecord b{{1, 0, 0}, {1, 0}, cov};
    EXPECT_FALSE(redundancy_prunable(a, std::vector{b}, 1, s, PruneConfig{}));
}

TEST(Redundancy, SimplexGridFindsMixture) {
    // 3I >= 0.5 diag(0.2,3) + 0.5 diag(3,0.2) + I = 2.6 I, but neither peer alone
    SensorModel s;
    s.base_var = 1.0;
    s.slope_var = 0.0;
    const PeerRecord a{{0, 0, 2}, {0, 1}, SymMat2::scaled_identity(3)};
    const std::vector<PeerRecord> peers{{{1, 0, 0}, {0, 1}, SymMat2::diag(0.2, 3)},
                                        {{2, 0, 0}, {0, 1}, SymMat2::diag(3, 0.2)}};
    PruneConfig pairwise;
    PruneConfig grid;
    grid.domination = DominationMode::simplex_grid;
    EXPECT_FALSE(redundancy_prunable(a, peers, 1, s, pairwise));
    EXPECT_TRUE(redundancy_prunable(a, peers, 1, s, grid));
    grid.grid_resolution = 1;  // only vertices: same as pairwise
    EXPECT_FALSE(redundancy_prunable(a, peers, 1, s, grid));
}

TEST(Redundancy, StructuralConditions) {
    SensorModel s;
    s.base_var = 1.0;
    s.slope_var = 0.0;
    const PeerRecord a{{0, 0, 1}, {1, 0}, SymMat2::scaled_identity(10)};
    const PeerRecord moved{{1, 0, 0}, {2, 0}, SymMat2::identity()};
    const PeerRecord sibling{{0, 1, 0}, {1, 0}, SymMat2::identity()};  // LCA is a measurement node
    const PeerRecord ok{{1, 0, 0}, {1, 0}, SymMat2::identity()};
    EXPECT_FALSE(redundancy_prunable(a, std::vector{moved}, 1, s, PruneConfig{}));
    EXPECT_FALSE(redundancy_prunable(a, std::vector{sibling}, 1, s, PruneConfig{}));
    EXPECT_FALSE(redundancy_prunable(a, std::vector{ok, sibling}, 1, s, PruneConfig{}));
    EXPECT_TRUE(redundancy_prunable(a, std::vector{ok}, 1, s, PruneConfig{}));
    EXPECT_FALSE(redundancy_prunable(a, std::vector<PeerRecord>{}, 1, s, PruneConfig{}));
}

TEST(Redundancy, Eps2SlackAndNoiseTermSign) {
    SensorModel s;
    s.base_var = 1.0;
    s.slope_var = 0.0;
    const PeerRecord a{{0, 0, 1}, {1, 0}, SymMat2::scaled_identity(2)};
    const PeerRecord b{{1, 0, 0}, {1, 0}, SymMat2::identity()};
    PruneConfig p;
    EXPECT_FALSE(redundancy_prunable(a, std::vector{b}, 2, s, p));  // 2I vs I + 2I
    p.eps2 = 1.0;
    EXPECT_TRUE(redundancy_prunable(a, std::vector{b}, 2, s, p));
    PruneConfig fault;
    fault.fault_flip_noise_term = true;
    EXPECT_TRUE(redundancy_prunable(b, std::vector{PeerRecord{{0, 0, 1}, {1, 0}, SymMat2::scaled_identity(2)}}, 2, s,
                                    fault));
}

TEST(BuildTree, ChainTree) {
    const Scenario s = chain_scenario();
    const PolicyTree t = build_tree(s, PruneConfig::disabled());
    EXPECT_EQ(t.node_count_kept, 3u);
    const Vec2 robot{1.0, 0.0};
    const double want = riccati_step(s.estimate0.cov, s.target, s.sensor, robot, s.estimate0.mean).trace();
    EXPECT_DOUBLE_EQ(t.minimax_value, want);
    EXPECT_EQ(t.minimax_value, t.root.value);
}

TEST(BuildTree, UnprunedNodeCountMatchesFormula) {
    const PolicyTree t = build_tree(small_scenario(2, 2, 2), PruneConfig::disabled());
    EXPECT_EQ(t.node_count_kept, 31u);
    EXPECT_EQ(t.node_count_pruned, 0u);
    const PolicyTree u = build_tree(small_scenario(2, 4, 5), PruneConfig::disabled());
    EXPECT_EQ(u.node_count_kept, 505u);
}

TEST(BuildTree, PrunedValueEqualsUnpruned) {
    for (std::uint64_t seed = 100; seed < 140; ++seed) {
        const Scenario s = verify::random_small_scenario(seed);
        const PolicyTree full = build_tree(s, PruneConfig::disabled());
        const PolicyTree pruned = build_tree(s, PruneConfig{});
        EXPECT_NEAR(full.minimax_value, pruned.minimax_value, 1e-9) << "seed " << seed;
        EXPECT_NEAR(full.minimax_value, oracle::enumerate(s).value, 1e-12) << "seed " << seed;
        EXPECT_LE(pruned.node_count_kept, full.node_count_kept);
    }
}

TEST(BuildTree, RootActionMatchesOracle) {
    for (std::uint64_t seed = 200; seed < 240; ++seed) {
        const Scenario s = verify::random_small_scenario(seed);
        const auto ref = oracle::enumerate(s);
        const PolicyTree t = build_tree(s, PruneConfig{});
        EXPECT_EQ(extract_policy(t).root_action, oracle::best_root_action(ref)) << "seed " << seed;
    }
}

TEST(BuildTree, StructureAndCounts) {
    Scenario s = default_scenario();
    s.horizon = 3;
    const PolicyTree t = build_tree(s, PruneConfig{});
    std::uint64_t kept = 0, stubs = 0;
    walk(t.root, [&](const TreeNode& n) {
        if (n.kept()) {
            ++kept;
        } else {
            ++stubs;
            EXPECT_TRUE(n.children.empty());
            EXPECT_NE(n.kind, NodeKind::measurement);  // measurement nodes are never pruned
        }
        if (n.kind == NodeKind::measurement && n.kept()) {
            EXPECT_EQ(n.children.size(), static_cast<std::size_t>(s.candidates));
            EXPECT_EQ(n.candidates.size(), static_cast<std::size_t>(s.candidates));
            bool any_stub = false;
            for (const auto& c : n.children) any_stub = any_stub || !c.kept();
            EXPECT_EQ(any_stub, !n.complete);
        }
        if (n.kind == NodeKind::control && n.kept()) {
            EXPECT_EQ(n.children.size(), s.motion.controls.size());
        }
    });
    EXPECT_EQ(kept, t.node_count_kept);
    EXPECT_EQ(stubs, t.node_count_pruned);
    EXPECT_LE(kept + stubs, full_tree_size(4, 5, 7));
}

TEST(BuildTree, Deterministic) {
    Scenario s = default_scenario();
    s.horizon = 3;
    const PolicyTree a = build_tree(s, PruneConfig{});
    const PolicyTree b = build_tree(s, PruneConfig{});
    EXPECT_EQ(a.minimax_value, b.minimax_value);
    EXPECT_EQ(a.node_count_kept, b.node_count_kept);
    EXPECT_EQ(a.scenario_digest, b.scenario_digest);
}

TEST(BuildTree, KeptNodesNonIncreasingInEps1) {
    Scenario s = default_scenario();
    s.horizon = 3;
    std::uint64_t prev = ~0ULL;
    for (double e1 : {0.0, 0.01, 0.1, 0.5, 1.0, 5.0}) {
        PruneConfig p;
        p.eps1 = e1;
        const PolicyTree t = build_tree(s, p);
        EXPECT_LE(t.node_count_kept, prev) << "eps1 " << e1;
        prev = t.node_count_kept;
    }
}

TEST(BuildTree, RefusesHugeUnprunedTrees) {
    Scenario s = default_scenario();
    s.horizon = 6;  // 13 levels, 8.08e7 nodes
    try {
        build_tree(s, PruneConfig::disabled());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::tree_too_large);
    }
    s.horizon = 60;  // size overflows 64 bits
    try {
        build_tree(s, PruneConfig::disabled());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::tree_too_large);
    }
}

TEST(BuildTree, NodeBudget) {
    Scenario s = default_scenario();
    s.horizon = 3;
    s.node_budget = 50;
    try {
        build_tree(s, PruneConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::node_budget_exceeded);
    }
}

TEST(BuildTree, RejectsInvalidInput) {
    Scenario s = default_scenario();
    s.horizon = 0;
    EXPECT_THROW(build_tree(s, PruneConfig{}), Error);
    s = default_scenario();
    PruneConfig p;
    p.eps1 = -1.0;
    EXPECT_THROW(build_tree(s, p), Error);
}

TEST(ExtractPolicy, SingleControl) {
    Scenario s = small_scenario(3, 1, 2);
    const Policy p = extract_policy(build_tree(s, PruneConfig{}));
    EXPECT_EQ(p.root_action, 0u);
    EXPECT_EQ(p.actions.size(), 1u + 2u + 4u);
    for (const auto& [path, action] : p.actions) EXPECT_EQ(action, 0u);
}

TEST(ExtractPolicy, PrefersCloserControl) {
    // Target far to the +x side: moving toward it lowers the noise, so +x wins.
    Scenario s = small_scenario(1, 2, 1);
    s.motion.controls = {{-1.0, 0.0}, {1.0, 0.0}};
    s.estimate0.mean = {5.0, 0.0};
    const PolicyTree t = build_tree(s, PruneConfig::disabled());
    EXPECT_LT(t.root.children[1].value, t.root.children[0].value);
    EXPECT_EQ(extract_policy(t).root_action, 1u);
}

TEST(MinimaxPath, EndsAtLeafWithMinimaxValue) {
    Scenario s = default_scenario();
    s.horizon = 3;
    const PolicyTree t = build_tree(s, PruneConfig{});
    const auto path = minimax_path(t);
    ASSERT_EQ(path.size(), 7u);
    EXPECT_EQ(path.back()->kind, NodeKind::leaf);
    EXPECT_EQ(path.back()->value, t.minimax_value);
}
