#pragma once

#include "error.hpp"
#include "rng.hpp"
#include "tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace uft {

/// Logit magnitude used to represent deterministic choices without infinities.
inline constexpr double kSaturatedLogit = 30.0;

/// Numerically stable softmax.
inline std::vector<double> softmax(std::span<const double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (double& x : p) x /= z;
    return p;
}

/**
 * Tabular softmax policy: one logit vector of length B per internal node.
 */
class Policy {
public:
    Policy(int branching, int height)
        : branching_(branching), height_(height), logits_(internal_nodes(branching, height) * branching, 0.0) {}

    explicit Policy(const SearchTree& tree) : Policy(tree.branching(), tree.height()) {}

    int branching() const noexcept { return branching_; }
    int height() const noexcept { return height_; }
    std::size_t internal_count() const noexcept { return logits_.size() / branching_; }

    std::span<const double> logits(NodeRef s) const { return {logits_.data() + offset(s), std::size_t(branching_)}; }
    std::span<double> logits(NodeRef s) { return {logits_.data() + offset(s), std::size_t(branching_)}; }

    std::span<const double> logits_by_id(std::size_t id) const {
        return {logits_.data() + id * branching_, std::size_t(branching_)};
    }
    std::span<double> logits_by_id(std::size_t id) { return {logits_.data() + id * branching_, std::size_t(branching_)}; }

    const std::vector<double>& raw() const noexcept { return logits_; }

    /// max |theta(s, a)| over all nodes and actions.
    double max_abs_logit() const {
        double m = 0.0;
        for (double x : logits_) m = std::max(m, std::abs(x));
        return m;
    }

    friend bool operator==(const Policy&, const Policy&) = default;

private:
    static std::size_t internal_nodes(int b, int h) {
        if (b < 2 || h < 1) throw invalid_parameter("policy shape needs B >= 2 and H >= 1");
        return static_cast<std::size_t>((checked_pow(b, h) - 1) / (b - 1));
    }

    std::size_t offset(NodeRef s) const {
        if (s.height < 0 || s.height >= height_) throw invalid_parameter("policy queried at a leaf or invalid node");
        const std::uint64_t level_start = (checked_pow(branching_, s.height) - 1) / (branching_ - 1);
        return static_cast<std::size_t>((level_start + s.index) * branching_);
    }

    int branching_;
    int height_;
    std::vector<double> logits_;
};

inline Policy uniform_policy(const SearchTree& tree) { return Policy(tree); }

inline std::vector<double> action_probs(const Policy& policy, NodeRef s) { return softmax(policy.logits(s)); }

/// Saturated policy that picks, at every internal node, the lowest action leading to the best reachable leaf.
inline Policy greedy_policy(const SearchTree& tree) {
    Policy policy(tree);
    const auto best = best_reachable(tree);
    for (int h = 0; h < tree.height(); ++h) {
        for (std::uint64_t i = 0; i < tree.nodes_at(h); ++i) {
            const NodeRef s{h, i};
            auto row = policy.logits(s);
            int chosen = 0;
            for (int a = 0; a < tree.branching(); ++a)
                if (best[h + 1][tree.child(s, a).index] == best[h][i]) {
                    chosen = a;
                    break;
                }
            for (int a = 0; a < tree.branching(); ++a) row[a] = a == chosen ? kSaturatedLogit : -kSaturatedLogit;
        }
    }
    return policy;
}

/// Counts terminal-leaf visits: with multiplicity, and distinct.
class LeafCounter {
public:
    LeafCounter() = default;
    explicit LeafCounter(std::uint64_t leaf_count) : seen_(leaf_count, false) {}

    void record(std::uint64_t leaf_index) {
        ++total_;
        if (leaf_index < seen_.size() && !seen_[leaf_index]) {
            seen_[leaf_index] = true;
            ++distinct_;
        }
    }

    std::uint64_t total() const noexcept { return total_; }
    std::uint64_t distinct() const noexcept { return distinct_; }

private:
    std::vector<bool> seen_;
    std::uint64_t total_ = 0;
    std::uint64_t distinct_ = 0;
};

struct TrajectoryStep {
    NodeRef node;
    int action = 0;
};

struct Trajectory {
    int start_height = 0;
    std::vector<TrajectoryStep> steps;  // heights start_height .. H-1
    NodeRef terminal_leaf;
    double terminal_reward = 0.0;
};

/// Inverse-CDF draw from a probability vector.
inline int sample_action(std::span<const double> probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t a = 0; a < probs.size(); ++a) {
        acc += probs[a];
        if (u < acc) return static_cast<int>(a);
    }
    // Rounding left u above the total mass; return the last action with mass.
    for (std::size_t a = probs.size(); a-- > 0;)
        if (probs[a] > 0.0) return static_cast<int>(a);
    return 0;
}

inline Trajectory sample_trajectory(const Policy& policy, const SearchTree& tree, NodeRef start, Rng& rng,
                                    LeafCounter* counter = nullptr) {
    if (!tree.contains(start)) throw invalid_parameter("trajectory start outside the tree");
    Trajectory traj;
    traj.start_height = start.height;
    NodeRef s = start;
    while (!tree.is_leaf(s)) {
        const auto p = action_probs(policy, s);
        const int a = sample_action(p, rng);
        traj.steps.push_back({s, a});
        s = tree.child(s, a);
    }
    traj.terminal_leaf = s;
    traj.terminal_reward = tree.leaf_rewards()[s.index];
    if (counter) counter->record(s.index);
    return traj;
}

/// V^pi for every node, indexed [height][index]; leaves hold their rewards.
inline std::vector<std::vector<double>> value_table(const Policy& policy, const SearchTree& tree) {
    const int H = tree.height();
    const auto B = static_cast<std::uint64_t>(tree.branching());
    std::vector<std::vector<double>> v(H + 1);
    v[H] = tree.leaf_rewards();
    for (int h = H - 1; h >= 0; --h) {
        v[h].assign(tree.nodes_at(h), 0.0);
        for (std::uint64_t i = 0; i < v[h].size(); ++i) {
            const auto p = action_probs(policy, {h, i});
            double acc = 0.0;
            for (std::uint64_t a = 0; a < B; ++a) acc += p[a] * v[h + 1][i * B + a];
            v[h][i] = acc;
        }
    }
    return v;
}

namespace detail {
inline double subtree_value(const Policy& policy, const SearchTree& tree, NodeRef s) {
    if (tree.is_leaf(s)) return tree.leaf_rewards()[s.index];
    const auto p = action_probs(policy, s);
    double acc = 0.0;
    for (int a = 0; a < tree.branching(); ++a) acc += p[a] * subtree_value(policy, tree, tree.child(s, a));
    return acc;
}
}  // namespace detail

inline double exact_value(const Policy& policy, const SearchTree& tree, NodeRef s) {
    if (!tree.contains(s)) throw invalid_parameter("node outside the tree");
    return detail::subtree_value(policy, tree, s);
}

inline double exact_q(const Policy& policy, const SearchTree& tree, NodeRef s, int a) {
    return exact_value(policy, tree, transition(tree, s, a));
}

/// Probability mu^pi(s) of reaching s from the root.
inline double reach_prob(const Policy& policy, const SearchTree& tree, NodeRef s) {
    if (!tree.contains(s)) throw invalid_parameter("node outside the tree");
    double mu = 1.0;
    while (s.height > 0) {
        const NodeRef up = tree.parent(s);
        const int a = static_cast<int>(s.index % static_cast<std::uint64_t>(tree.branching()));
        mu *= action_probs(policy, up)[a];
        s = up;
    }
    return mu;
}

/// KL(p || q) in nats; zero-mass terms of p contribute nothing.
inline double kl_div(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw invalid_parameter("KL of vectors with different lengths");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (!(q[i] > 0.0)) throw domain_error("KL support violation: q = 0 where p > 0");
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(kl, 0.0);
}

/// Probability that one root-started rollout ends at an optimal-reward leaf.
inline double exact_pass_at_1(const Policy& policy, const SearchTree& tree) {
    const int H = tree.height();
    const auto B = static_cast<std::uint64_t>(tree.branching());
    std::vector<double> level(tree.leaf_count());
    for (std::uint64_t i = 0; i < level.size(); ++i)
        level[i] = tree.leaf_rewards()[i] == tree.optimal_reward() ? 1.0 : 0.0;
    for (int h = H - 1; h >= 0; --h) {
        std::vector<double> up(tree.nodes_at(h), 0.0);
        for (std::uint64_t i = 0; i < up.size(); ++i) {
            const auto p = action_probs(policy, {h, i});
            for (std::uint64_t a = 0; a < B; ++a) up[i] += p[a] * level[i * B + a];
        }
        level = std::move(up);
    }
    return level[0];
}

/// Mean terminal reward of n root-started rollouts.
inline double mc_value(const Policy& policy, const SearchTree& tree, std::uint64_t n, Rng& rng,
                       LeafCounter* counter = nullptr) {
    if (n < 1) throw invalid_parameter("mc_value needs n >= 1");
    double sum = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) sum += sample_trajectory(policy, tree, kRoot, rng, counter).terminal_reward;
    return sum / static_cast<double>(n);
}

/**
 * Flat text snapshot: a "policy B H" header, then one line per internal
 * node with its dense id followed by B logits.
 */
inline void write_policy(std::ostream& os, const Policy& policy) {
    os << "policy " << policy.branching() << ' ' << policy.height() << '\n';
    os << std::setprecision(17);
    for (std::size_t id = 0; id < policy.internal_count(); ++id) {
        os << id;
        for (double x : policy.logits_by_id(id)) os << ' ' << x;
        os << '\n';
    }
}

inline Policy read_policy(std::istream& is) {
    std::string tag;
    int b = 0, h = 0;
    if (!(is >> tag >> b >> h) || tag != "policy") throw invalid_parameter("policy snapshot: bad header");
    if (b < 2 || h < 1) throw invalid_parameter("policy snapshot: bad shape");
    Policy policy(b, h);
    for (std::size_t id = 0; id < policy.internal_count(); ++id) {
        std::size_t got = 0;
        if (!(is >> got) || got != id) throw invalid_parameter("policy snapshot: node ids out of order");
        for (double& x : policy.logits_by_id(id))
            if (!(is >> x)) throw invalid_parameter("policy snapshot: truncated row");
    }
    return policy;
}

}  // namespace uft
