#include "oracles.hpp"
#include "uft/policy.hpp"
#include "uft/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace uft;

namespace {

Policy random_logits(const SearchTree& t, Rng& rng) { return random_policy(t, rng, 2.0); }

SearchTree random_rewards(int b, int h, Rng& rng) { return random_tree(b, h, rng); }

}  // namespace

TEST(UniformPolicy, EveryNodeUniform) {
    const auto t2 = build_adversarial(2, 3, 1, 0.5, 0);
    const auto t3 = build_adversarial(3, 2, 1, 0.5, 0);
    const auto u2 = uniform_policy(t2);
    const auto u3 = uniform_policy(t3);
    for (std::uint64_t i = 0; i < 4; ++i)
        for (double p : action_probs(u2, {2, i})) EXPECT_DOUBLE_EQ(p, 0.5);
    for (double p : action_probs(u3, {1, 2})) EXPECT_NEAR(p, 1.0 / 3, 1e-15);
    const auto p = action_probs(u3, kRoot);
    EXPECT_EQ(kl_div(p, p), 0.0);
}

TEST(ActionProbs, Examples) {
    Policy pol(2, 1);
    EXPECT_EQ(action_probs(pol, kRoot), (std::vector<double>{0.5, 0.5}));
    pol.logits(kRoot)[0] = std::log(2.0);
    const auto p = action_probs(pol, kRoot);
    EXPECT_NEAR(p[0], 2.0 / 3, 1e-15);
    EXPECT_NEAR(p[1], 1.0 / 3, 1e-15);
    Policy p3(3, 1);
    for (double& x : p3.logits(kRoot)) x = 5.0;
    for (double q : action_probs(p3, kRoot)) EXPECT_NEAR(q, 1.0 / 3, 1e-15);
}

TEST(ActionProbs, LeafRejected) {
    const Policy pol(2, 2);
    EXPECT_THROW(action_probs(pol, {2, 0}), invalid_parameter);
}

TEST(Softmax, LargeLogitsStayFinite) {
    const auto p = softmax(std::vector<double>{kSaturatedLogit, -kSaturatedLogit});
    EXPECT_GT(p[0], 1.0 - 1e-13);
    EXPECT_LT(p[1], 1e-13);
    const auto q = softmax(std::vector<double>{1000.0, 0.0});
    EXPECT_TRUE(std::isfinite(q[0]));
}

TEST(SampleTrajectory, SaturatedPolicyIsDeterministic) {
    const auto t = build_adversarial(2, 4, 1, 0.5, 3);
    const auto g = greedy_policy(t);
    const auto path = optimal_path(t);
    Rng rng(1);
    for (int k = 0; k < 200; ++k) EXPECT_EQ(sample_trajectory(g, t, kRoot, rng).terminal_leaf, path.nodes.back());
}

TEST(SampleTrajectory, LeafStartIsEmpty) {
    const auto t = build_adversarial(2, 2, 1, 0.5, 3);
    Rng rng(1);
    LeafCounter c(t.leaf_count());
    const auto tr = sample_trajectory(Policy(t), t, {2, 3}, rng, &c);
    EXPECT_TRUE(tr.steps.empty());
    EXPECT_EQ(tr.start_height, 2);
    EXPECT_EQ(tr.terminal_reward, t.leaf_rewards()[3]);
    EXPECT_EQ(c.total(), 1u);
}

TEST(SampleTrajectory, StepsAreConnected) {
    const auto t = build_adversarial(3, 3, 1, 0.5, 3);
    Rng rng(2);
    const auto pol = random_logits(t, rng);
    for (int k = 0; k < 50; ++k) {
        const auto tr = sample_trajectory(pol, t, {1, 2}, rng);
        ASSERT_EQ(tr.steps.size(), 2u);
        EXPECT_EQ(tr.steps[0].node, (NodeRef{1, 2}));
        EXPECT_EQ(transition(t, tr.steps[0].node, tr.steps[0].action), tr.steps[1].node);
        EXPECT_EQ(transition(t, tr.steps[1].node, tr.steps[1].action), tr.terminal_leaf);
        EXPECT_EQ(tr.terminal_reward, reward(t, tr.terminal_leaf));
    }
}

TEST(SampleTrajectory, UniformLeafLaw) {
    const SearchTree t(2, 10, std::vector<double>(1024, 0.0));
    const Policy u(t);
    Rng rng(42);
    std::vector<int> freq(1024, 0);
    const int n = 100000;
    for (int k = 0; k < n; ++k) ++freq[sample_trajectory(u, t, kRoot, rng).terminal_leaf.index];
    const double p = 1.0 / 1024, se = std::sqrt(p * (1 - p) / n);
    // 1024 simultaneous checks: allow the 4-s.e. band to be missed by a handful of leaves.
    int outside = 0;
    for (int f : freq) outside += std::abs(f / double(n) - p) > 4 * se;
    EXPECT_LE(outside, 2);
}

TEST(ExactValue, Examples) {
    const SearchTree t(2, 1, {1.0, 0.1});
    EXPECT_NEAR(exact_value(Policy(t), t, kRoot), 0.55, 1e-15);
    const auto a = build_adversarial(3, 3, 2, 0.5, 4);
    EXPECT_NEAR(exact_value(greedy_policy(a), a, kRoot), a.optimal_reward(), 1e-12);
}

TEST(ExactValue, MatchesBruteForceAndMonteCarlo) {
    Rng rng(9);
    const auto t = random_rewards(3, 3, rng);
    const auto pol = random_logits(t, rng);
    const double v = exact_value(pol, t, kRoot);
    EXPECT_NEAR(v, oracle::brute_value(pol, t, 0, 0), 1e-12);
    const int n = 1000000;
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < n; ++k) {
        const double r = sample_trajectory(pol, t, kRoot, rng).terminal_reward;
        sum += r;
        sq += r * r;
    }
    const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_NEAR(mean, v, 4 * se);
}

TEST(ExactQ, OneStepAndBruteForce) {
    Rng rng(10);
    const auto t = random_rewards(3, 3, rng);
    const auto pol = random_logits(t, rng);
    for (std::uint64_t i = 0; i < 9; ++i)
        for (int a = 0; a < 3; ++a) EXPECT_EQ(exact_q(pol, t, {2, i}, a), t.leaf_rewards()[i * 3 + a]);
    for (int h = 0; h < 3; ++h)
        for (std::uint64_t i = 0; i < t.nodes_at(h); ++i) {
            double v = 0.0;
            const auto p = action_probs(pol, {h, i});
            for (int a = 0; a < 3; ++a) {
                const double q = exact_q(pol, t, {h, i}, a);
                EXPECT_NEAR(q, oracle::brute_q(pol, t, h, i, a), 1e-12);
                v += p[a] * q;
            }
            EXPECT_NEAR(v, exact_value(pol, t, {h, i}), 1e-12);
        }
    EXPECT_THROW(exact_q(pol, t, {3, 0}, 0), invalid_parameter);
}

TEST(ValueTable, AgreesWithRecursion) {
    Rng rng(11);
    const auto t = random_rewards(2, 5, rng);
    const auto pol = random_logits(t, rng);
    const auto v = value_table(pol, t);
    for (int h = 0; h <= 5; ++h)
        for (std::uint64_t i = 0; i < t.nodes_at(h); ++i) EXPECT_NEAR(v[h][i], exact_value(pol, t, {h, i}), 1e-12);
}

TEST(ReachProb, Examples) {
    const auto t = build_adversarial(3, 3, 1, 0.5, 0);
    const Policy u(t);
    EXPECT_EQ(reach_prob(u, t, kRoot), 1.0);
    EXPECT_NEAR(reach_prob(u, t, {2, 5}), 1.0 / 9, 1e-15);
    Rng rng(3);
    const auto pol = random_logits(t, rng);
    for (int h = 0; h <= 3; ++h) {
        double mass = 0.0;
        for (std::uint64_t i = 0; i < t.nodes_at(h); ++i) mass += reach_prob(pol, t, {h, i});
        EXPECT_NEAR(mass, 1.0, 1e-12);
    }
    for (std::uint64_t leaf = 0; leaf < 27; ++leaf)
        EXPECT_NEAR(reach_prob(pol, t, {3, leaf}), oracle::path_prob(pol, 3, 3, leaf), 1e-14);
}

TEST(KlDiv, Examples) {
    const std::vector<double> p{0.2, 0.3, 0.5};
    EXPECT_EQ(kl_div(p, p), 0.0);
    for (int b = 2; b <= 8; ++b) {
        std::vector<double> one_hot(b, 0.0), uniform(b, 1.0 / b);
        one_hot[b / 2] = 1.0;
        EXPECT_NEAR(kl_div(one_hot, uniform), std::log(double(b)), 1e-14);
    }
    EXPECT_NEAR(kl_div(std::vector<double>{0.5, 0.5}, std::vector<double>{0.25, 0.75}),
                0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-15);
    EXPECT_NEAR(kl_div(std::vector<double>{0.5, 0.5}, std::vector<double>{0.25, 0.75}), 0.14384, 1e-5);
}

TEST(KlDiv, Errors) {
    EXPECT_THROW(kl_div(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}), domain_error);
    EXPECT_THROW(kl_div(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), invalid_parameter);
    EXPECT_EQ(kl_div(std::vector<double>{0.0, 1.0}, std::vector<double>{0.0, 1.0}), 0.0);
}

TEST(PassAt1, Examples) {
    const auto t = build_adversarial(2, 3, 1, 0.5, 5);
    EXPECT_NEAR(exact_pass_at_1(Policy(t), t), 1.0 / 8, 1e-15);
    EXPECT_NEAR(exact_pass_at_1(greedy_policy(t), t), 1.0, 1e-12);
    const auto all = build_adversarial(2, 3, 8, 0.5, 5);
    Rng rng(4);
    EXPECT_NEAR(exact_pass_at_1(random_logits(all, rng), all), 1.0, 1e-12);
}

TEST(PassAt1, MatchesOracleAndRollouts) {
    Rng rng(6);
    const auto t = build_adversarial(3, 3, 3, 0.5, 8);
    Policy pol = random_logits(t, rng);
    EXPECT_NEAR(exact_pass_at_1(pol, t), oracle::brute_pass1(pol, t), 1e-12);
    const double p = exact_pass_at_1(pol, t);
    const int n = 100000;
    int hits = 0;
    for (int k = 0; k < n; ++k) hits += sample_trajectory(pol, t, kRoot, rng).terminal_reward == 1.0;
    EXPECT_NEAR(hits / double(n), p, 4 * std::sqrt(p * (1 - p) / n));
}

TEST(McValue, Examples) {
    const SearchTree flat(2, 3, std::vector<double>(8, 0.1));
    Rng rng(1);
    LeafCounter c(8);
    EXPECT_DOUBLE_EQ(mc_value(Policy(flat), flat, 37, rng, &c), 0.1);
    EXPECT_EQ(c.total(), 37u);
    EXPECT_THROW(mc_value(Policy(flat), flat, 0, rng), invalid_parameter);
}

TEST(LeafCounter, DistinctAndTotal) {
    LeafCounter c(4);
    for (std::uint64_t i : {0, 1, 1, 3, 0}) c.record(i);
    EXPECT_EQ(c.total(), 5u);
    EXPECT_EQ(c.distinct(), 3u);
}

TEST(PolicySnapshot, RoundTrip) {
    Rng rng(12);
    const auto t = build_adversarial(3, 3, 1, 0.5, 1);
    const auto pol = random_logits(t, rng);
    std::stringstream ss;
    write_policy(ss, pol);
    EXPECT_EQ(read_policy(ss), pol);
    std::stringstream bad("policy 2 2\n0 1 2\n2 0 0\n");
    EXPECT_THROW(read_policy(bad), invalid_parameter);
}

TEST(RegretDecomposition, ExactIdentity) {
    Rng rng(13);
    for (int rep = 0; rep < 20; ++rep) {
        const int b = 2 + static_cast<int>(rng.below(2));
        const int h = 1 + static_cast<int>(rng.below(4));
        const auto t = random_rewards(b, h, rng);
        const auto pi = random_logits(t, rng);
        std::vector<Policy> seq;
        for (int k = 0; k < 5; ++k) seq.push_back(random_logits(t, rng));
        double lhs = 0.0, rhs = 0.0;
        for (const auto& pt : seq) lhs += oracle::brute_value(pi, t, 0, 0) - oracle::brute_value(pt, t, 0, 0);
        for (int d = 0; d < h; ++d)
            for (std::uint64_t i = 0; i < t.nodes_at(d); ++i) {
                const double mu = reach_prob(pi, t, {d, i});
                for (const auto& pt : seq) {
                    const auto p = oracle::naive_softmax(oracle::row(pi, d, i));
                    const auto q = oracle::naive_softmax(oracle::row(pt, d, i));
                    for (int a = 0; a < b; ++a) rhs += mu * exact_q(pt, t, {d, i}, a) * (p[a] - q[a]);
                }
            }
        EXPECT_NEAR(lhs, rhs, 1e-9) << "B=" << b << " H=" << h;
    }
}
