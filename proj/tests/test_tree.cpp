#include "oracles.hpp"
#include "uft/tree.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace uft;

namespace {

int count_reward(const SearchTree& t, double r) {
    return static_cast<int>(std::count(t.leaf_rewards().begin(), t.leaf_rewards().end(), r));
}

}  // namespace

TEST(BuildAdversarial, EightLeafInstance) {
    const auto t = build_adversarial(2, 3, 1, 0.5, 7);
    EXPECT_EQ(t.leaf_count(), 8u);
    EXPECT_EQ(count_reward(t, 1.0), 1);
    EXPECT_EQ(count_reward(t, 0.1), 3);
    EXPECT_EQ(count_reward(t, 0.0), 4);
    EXPECT_DOUBLE_EQ(t.gap(), 0.9);
    EXPECT_DOUBLE_EQ(t.optimal_reward(), 1.0);
}

TEST(BuildAdversarial, AllOptimalDegenerate) {
    const auto t = build_adversarial(2, 1, 2, 0.0, 0);
    EXPECT_EQ(count_reward(t, 1.0), 2);
}

TEST(BuildAdversarial, FullFormatFraction) {
    const auto t = build_adversarial(3, 2, 1, 1.0, 3);
    EXPECT_EQ(count_reward(t, 1.0), 1);
    EXPECT_EQ(count_reward(t, 0.1), 8);
    EXPECT_EQ(count_reward(t, 0.0), 0);
}

TEST(BuildAdversarial, RejectsBadParameters) {
    EXPECT_THROW(build_adversarial(2, 3, 9, 0.5, 0), invalid_parameter);
    EXPECT_THROW(build_adversarial(2, 3, 0, 0.5, 0), invalid_parameter);
    EXPECT_THROW(build_adversarial(1, 3, 1, 0.5, 0), invalid_parameter);
    EXPECT_THROW(build_adversarial(2, 0, 1, 0.5, 0), invalid_parameter);
    EXPECT_THROW(build_adversarial(2, 3, 1, 1.5, 0), invalid_parameter);
}

TEST(BuildAdversarial, SeedDeterminismAndSpread) {
    EXPECT_EQ(build_adversarial(3, 4, 2, 0.3, 11).leaf_rewards(), build_adversarial(3, 4, 2, 0.3, 11).leaf_rewards());
    // The optimal leaf should land in every position over many seeds.
    std::vector<int> hits(8, 0);
    for (std::uint64_t s = 0; s < 4000; ++s) {
        const auto t = build_adversarial(2, 3, 1, 0.5, s);
        ++hits[std::find(t.leaf_rewards().begin(), t.leaf_rewards().end(), 1.0) - t.leaf_rewards().begin()];
    }
    for (int h : hits) EXPECT_NEAR(h, 500, 4 * std::sqrt(4000 * (1.0 / 8) * (7.0 / 8)));
}

TEST(Transition, IndexArithmetic) {
    const auto t2 = build_adversarial(2, 3, 1, 0.5, 0);
    EXPECT_EQ(transition(t2, {0, 0}, 1), (NodeRef{1, 1}));
    EXPECT_EQ(transition(t2, {1, 1}, 0), (NodeRef{2, 2}));
    const auto t3 = build_adversarial(3, 2, 1, 0.5, 0);
    EXPECT_EQ(transition(t3, {1, 2}, 2), (NodeRef{2, 8}));
    EXPECT_EQ(t3.parent({2, 8}), (NodeRef{1, 2}));
}

TEST(Transition, RejectsLeafAndBadAction) {
    const auto t = build_adversarial(2, 2, 1, 0.5, 0);
    EXPECT_THROW(transition(t, {2, 0}, 0), invalid_parameter);
    EXPECT_THROW(transition(t, {0, 0}, 2), invalid_parameter);
    EXPECT_THROW(transition(t, {0, 0}, -1), invalid_parameter);
}

TEST(Reward, ThreeLevels) {
    const auto t = build_adversarial(2, 3, 1, 0.5, 7);
    const auto path = optimal_path(t);
    EXPECT_EQ(reward(t, path.nodes.back()), 1.0);
    bool saw_format = false, saw_zero = false;
    for (std::uint64_t i = 0; i < t.leaf_count(); ++i) {
        const double r = reward(t, {3, i});
        saw_format |= r == 0.1;
        saw_zero |= r == 0.0;
    }
    EXPECT_TRUE(saw_format);
    EXPECT_TRUE(saw_zero);
    EXPECT_THROW(reward(t, {2, 0}), invalid_parameter);
}

TEST(OptimalPath, SmallCases) {
    EXPECT_EQ(optimal_path(SearchTree(2, 1, {0.1, 1.0})).actions, std::vector<int>{1});
    EXPECT_EQ(optimal_path(SearchTree(2, 1, {1.0, 1.0})).actions, std::vector<int>{0});
}

TEST(OptimalPath, MatchesExhaustiveMaximum) {
    Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> r(27);
        for (auto& x : r) x = std::vector<double>{0.0, 0.1, 1.0}[rng.below(3)];
        const SearchTree t(3, 3, r);
        const auto path = optimal_path(t);
        ASSERT_EQ(path.nodes.size(), 4u);
        NodeRef s = kRoot;
        for (int h = 0; h < 3; ++h) {
            EXPECT_EQ(path.nodes[h], s);
            s = transition(t, s, path.actions[h]);
        }
        EXPECT_EQ(path.nodes.back(), s);
        EXPECT_EQ(reward(t, s), *std::max_element(r.begin(), r.end()));
        // Lowest index among optimal leaves, since lexicographic action order equals leaf order.
        EXPECT_EQ(s.index, static_cast<std::uint64_t>(std::max_element(r.begin(), r.end()) - r.begin()));
    }
}

TEST(SearchTreeShape, ClosedForms) {
    for (int b = 2; b <= 4; ++b)
        for (int h = 1; h <= 8; ++h) {
            const SearchTree t(b, h, std::vector<double>(checked_pow(b, h), 0.0));
            std::uint64_t bh = 1;
            for (int i = 0; i < h; ++i) bh *= b;
            EXPECT_EQ(t.leaf_count(), bh);
            EXPECT_EQ(t.node_count(), (bh * b - 1) / (b - 1));
        }
}

TEST(SearchTreeShape, ValidatesRewardsAndGap) {
    EXPECT_THROW(SearchTree(2, 1, {0.5}), invalid_parameter);
    EXPECT_THROW(SearchTree(2, 1, {1.5, 0.0}), invalid_parameter);
    EXPECT_THROW(SearchTree(2, 1, {1.0, 0.5}, 0.9), invalid_parameter);
    EXPECT_DOUBLE_EQ(SearchTree(2, 1, {1.0, 0.5}).gap(), 0.5);
}

TEST(TreeSpecRecord, RoundTrip) {
    const auto t = build_adversarial(3, 2, 2, 0.25, 99);
    const auto spec = TreeSpec::from_record(t.spec().to_record());
    EXPECT_EQ(build_from_spec(spec).leaf_rewards(), t.leaf_rewards());
    const auto c = build_countdown({3, 5, 7}, 12);
    EXPECT_EQ(build_from_spec(TreeSpec::from_record(c.spec().to_record())).leaf_rewards(), c.leaf_rewards());
}

TEST(Countdown, TwentyFourFromFourNumbers) {
    const auto t = build_countdown({3, 5, 7, 13}, 24);
    EXPECT_EQ(t.branching(), 48);
    EXPECT_EQ(t.height(), 3);
    EXPECT_DOUBLE_EQ(t.optimal_reward(), 1.0);
    // (5*13+7)/3: mul(5,13) -> [3,7,65]; add(65,7) -> [3,72]; div(72,3).
    NodeRef s = kRoot;
    s = transition(t, s, ((1 * 3 + 2) * 4) + 2);  // i=1 (5), j=3 (13) -> j'=2, mul
    s = transition(t, s, ((2 * 2 + 1) * 4) + 0);  // i=2 (65), j=1 (7) -> j'=1, add
    s = transition(t, s, ((1 * 1 + 0) * 4) + 3);  // i=1 (72), j=0 (3) -> j'=0, div
    EXPECT_EQ(reward(t, s), 1.0);
}

TEST(Countdown, SmallCases) {
    EXPECT_DOUBLE_EQ(build_countdown({1, 1}, 2).optimal_reward(), 1.0);
    const auto t = build_countdown({2, 3}, 7);
    EXPECT_DOUBLE_EQ(t.optimal_reward(), 0.1);
    const auto results = oracle::countdown_results({{2, 1}, {3, 1}});
    EXPECT_EQ(results.count({7, 1}), 0u);
    EXPECT_EQ(results.size(), 6u);  // 5, 6, -1, 1, 2/3, 3/2
}

TEST(Countdown, LeafCountsMatchEnumeration) {
    const std::vector<std::pair<std::vector<long long>, long long>> cases{
        {{3, 5, 7, 13}, 24}, {{2, 3}, 6}, {{4, 0, 2}, 8}, {{1, 2, 3}, 7}, {{6, 6, 0}, 1}, {{2, 2, 2, 2}, 1}};
    for (const auto& [nums, target] : cases) {
        const auto t = build_countdown(nums, target);
        std::vector<oracle::Frac> vals;
        for (long long v : nums) vals.push_back({v, 1});
        const auto [hits, valid] = oracle::countdown_count(vals, target);
        EXPECT_EQ(count_reward(t, 1.0), static_cast<int>(hits));
        EXPECT_EQ(count_reward(t, 1.0) + count_reward(t, 0.1), static_cast<int>(valid));
    }
}

TEST(Countdown, RejectsBadSizes) {
    EXPECT_THROW(build_countdown({}, 1), invalid_parameter);
    EXPECT_THROW(build_countdown({1}, 1), invalid_parameter);
    EXPECT_THROW(build_countdown({1, 2, 3, 4, 5}, 1), invalid_parameter);
}
