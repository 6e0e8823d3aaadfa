#pragma once

#include "error.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace uft {

/// Rewards of the three-level verifier scheme.
inline constexpr double kAccuracyReward = 1.0;
inline constexpr double kFormatReward = 0.1;
inline constexpr double kIncorrectReward = 0.0;

/// Largest number of leaves a tree may have; bounds reward-table memory.
inline constexpr std::uint64_t kMaxLeaves = std::uint64_t{1} << 26;

/// Node of a complete B-ary tree addressed by (height, index within height).
struct NodeRef {
    int height = 0;
    std::uint64_t index = 0;

    friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

inline constexpr NodeRef kRoot{0, 0};

/// B^e with an overflow guard at kMaxLeaves.
inline std::uint64_t checked_pow(std::uint64_t base, int exponent) {
    std::uint64_t r = 1;
    for (int i = 0; i < exponent; ++i) {
        if (r > kMaxLeaves / base) throw invalid_parameter("tree too large: B^H exceeds leaf limit");
        r *= base;
    }
    return r;
}

/// Serializable construction record; any tree is rebuilt from this line.
struct TreeSpec {
    std::string flavor = "adversarial";  // adversarial | countdown | explicit
    int branching = 2;
    int height = 1;
    std::uint64_t optimal_count = 1;  // K
    double format_fraction = 0.5;
    std::uint64_t seed = 0;
    std::vector<long long> numbers;
    long long target = 0;

    std::string to_record() const {
        std::ostringstream os;
        os << "flavor=" << flavor;
        if (flavor == "countdown") {
            os << " numbers=";
            for (std::size_t i = 0; i < numbers.size(); ++i) os << (i ? "," : "") << numbers[i];
            os << " target=" << target;
        } else {
            os.precision(17);
            os << " B=" << branching << " H=" << height << " K=" << optimal_count
               << " format_fraction=" << format_fraction << " seed=" << seed;
        }
        return os.str();
    }

    static TreeSpec from_record(const std::string& record) {
        TreeSpec spec;
        std::istringstream is(record);
        std::string token;
        while (is >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos) throw invalid_parameter("malformed tree record token: " + token);
            const std::string key = token.substr(0, eq);
            const std::string value = token.substr(eq + 1);
            try {
                if (key == "flavor") spec.flavor = value;
                else if (key == "B") spec.branching = std::stoi(value);
                else if (key == "H") spec.height = std::stoi(value);
                else if (key == "K") spec.optimal_count = std::stoull(value);
                else if (key == "format_fraction") spec.format_fraction = std::stod(value);
                else if (key == "seed") spec.seed = std::stoull(value);
                else if (key == "target") spec.target = std::stoll(value);
                else if (key == "numbers") {
                    spec.numbers.clear();
                    std::istringstream ns(value);
                    std::string n;
                    while (std::getline(ns, n, ',')) spec.numbers.push_back(std::stoll(n));
                } else {
                    throw invalid_parameter("unknown tree record key: " + key);
                }
            } catch (const std::logic_error& e) {
                if (dynamic_cast<const invalid_parameter*>(&e)) throw;
                throw invalid_parameter("bad value for tree record key " + key + ": " + value);
            }
        }
        return spec;
    }
};

/**
 * Complete B-ary search tree of height H with verifier rewards on the leaves.
 *
 * Nodes are implicit: only the B^H leaf rewards are stored, everything else
 * is index arithmetic. The child a of (h, i) is (h + 1, i * B + a).
 * Immutable after construction.
 */
class SearchTree {
public:
    /// Validates shape and rewards. When gap <= 0 it is derived from the rewards.
    SearchTree(int branching, int height, std::vector<double> leaf_rewards, double gap = 0.0,
               TreeSpec spec = {})
        : branching_(branching), height_(height), rewards_(std::move(leaf_rewards)),
          spec_(std::move(spec)) {
        if (branching < 2) throw invalid_parameter("branching factor must be >= 2");
        if (height < 1) throw invalid_parameter("height must be >= 1");
        leaf_count_ = checked_pow(static_cast<std::uint64_t>(branching), height);
        if (rewards_.size() != leaf_count_)
            throw invalid_parameter("leaf reward table size does not equal B^H");
        for (double r : rewards_)
            if (!(r >= 0.0 && r <= 1.0)) throw invalid_parameter("leaf reward outside [0, 1]");
        optimal_ = *std::max_element(rewards_.begin(), rewards_.end());
        double runner_up = -1.0;
        for (double r : rewards_)
            if (r < optimal_) runner_up = std::max(runner_up, r);
        if (gap > 0.0) {
            if (runner_up >= 0.0 && runner_up > optimal_ - gap + 1e-12)
                throw invalid_parameter("sub-optimality gap violated by leaf rewards");
            gap_ = gap;
        } else {
            gap_ = runner_up >= 0.0 ? optimal_ - runner_up : 1.0;
        }
        spec_.branching = branching;
        spec_.height = height;
        if (spec_.flavor.empty()) spec_.flavor = "explicit";
    }

    int branching() const noexcept { return branching_; }
    int height() const noexcept { return height_; }
    double optimal_reward() const noexcept { return optimal_; }
    double gap() const noexcept { return gap_; }
    const std::vector<double>& leaf_rewards() const noexcept { return rewards_; }
    const TreeSpec& spec() const noexcept { return spec_; }

    std::uint64_t leaf_count() const noexcept { return leaf_count_; }
    std::uint64_t nodes_at(int h) const { return checked_pow(static_cast<std::uint64_t>(branching_), h); }
    std::uint64_t node_count() const { return (leaf_count_ * branching_ - 1) / (branching_ - 1); }
    std::uint64_t internal_count() const { return (leaf_count_ - 1) / (branching_ - 1); }

    bool is_leaf(NodeRef s) const noexcept { return s.height == height_; }

    bool contains(NodeRef s) const {
        return s.height >= 0 && s.height <= height_ && s.index < nodes_at(s.height);
    }

    /// Dense id of an internal node, level by level; root is 0.
    std::uint64_t internal_id(NodeRef s) const {
        return (nodes_at(s.height) - 1) / (branching_ - 1) + s.index;
    }

    NodeRef child(NodeRef s, int a) const {
        return {s.height + 1, s.index * static_cast<std::uint64_t>(branching_) + static_cast<std::uint64_t>(a)};
    }

    NodeRef parent(NodeRef s) const {
        if (s.height == 0) throw invalid_parameter("root has no parent");
        return {s.height - 1, s.index / static_cast<std::uint64_t>(branching_)};
    }

private:
    int branching_;
    int height_;
    std::uint64_t leaf_count_ = 0;
    std::vector<double> rewards_;
    double optimal_ = 0.0;
    double gap_ = 0.0;
    TreeSpec spec_;
};

/// Deterministic child T(s, a).
inline NodeRef transition(const SearchTree& tree, NodeRef s, int a) {
    if (!tree.contains(s)) throw invalid_parameter("node outside the tree");
    if (tree.is_leaf(s)) throw invalid_parameter("transition from a leaf");
    if (a < 0 || a >= tree.branching()) throw invalid_parameter("action out of range");
    return tree.child(s, a);
}

inline double reward(const SearchTree& tree, NodeRef leaf) {
    if (!tree.contains(leaf) || !tree.is_leaf(leaf)) throw invalid_parameter("reward of a non-leaf node");
    return tree.leaf_rewards()[leaf.index];
}

/// Root-to-leaf path of the deterministic optimal policy.
struct OptimalPath {
    std::vector<NodeRef> nodes;  // length H + 1
    std::vector<int> actions;    // length H
};

/**
 * Best leaf reward reachable below every node, computed level by level from
 * the leaves. Entry h holds the B^h values of height h.
 */
inline std::vector<std::vector<double>> best_reachable(const SearchTree& tree) {
    const int H = tree.height();
    const auto B = static_cast<std::uint64_t>(tree.branching());
    std::vector<std::vector<double>> best(H + 1);
    best[H] = tree.leaf_rewards();
    for (int h = H - 1; h >= 0; --h) {
        best[h].resize(tree.nodes_at(h));
        for (std::uint64_t i = 0; i < best[h].size(); ++i) {
            double m = best[h + 1][i * B];
            for (std::uint64_t a = 1; a < B; ++a) m = std::max(m, best[h + 1][i * B + a]);
            best[h][i] = m;
        }
    }
    return best;
}

/// Backward induction; ties go to the lowest action index.
inline OptimalPath optimal_path(const SearchTree& tree) {
    const auto best = best_reachable(tree);
    OptimalPath path;
    NodeRef s = kRoot;
    path.nodes.push_back(s);
    for (int h = 0; h < tree.height(); ++h) {
        int chosen = 0;
        for (int a = 0; a < tree.branching(); ++a) {
            const NodeRef c = tree.child(s, a);
            if (best[h + 1][c.index] == best[h][s.index]) {
                chosen = a;
                break;
            }
        }
        path.actions.push_back(chosen);
        s = tree.child(s, chosen);
        path.nodes.push_back(s);
    }
    return path;
}

/**
 * Uniformly random hard instance: K target leaves score 1.0, a
 * format_fraction share of the rest (rounded down) score 0.1, the remainder 0.0.
 */
inline SearchTree build_adversarial(int branching, int height, std::uint64_t optimal_count,
                                    double format_fraction, std::uint64_t seed) {
    if (branching < 2) throw invalid_parameter("branching factor must be >= 2");
    if (height < 1) throw invalid_parameter("height must be >= 1");
    if (!(format_fraction >= 0.0 && format_fraction <= 1.0))
        throw invalid_parameter("format_fraction must lie in [0, 1]");
    const std::uint64_t n = checked_pow(static_cast<std::uint64_t>(branching), height);
    if (optimal_count < 1 || optimal_count > n) throw invalid_parameter("K must satisfy 1 <= K <= B^H");

    std::vector<std::uint64_t> order(n);
    std::iota(order.begin(), order.end(), std::uint64_t{0});
    Rng rng(derive_seed(seed, 0xadUL));
    const std::uint64_t rest = n - optimal_count;
    const auto formatted = static_cast<std::uint64_t>(std::floor(format_fraction * static_cast<double>(rest)));
    const std::uint64_t picks = optimal_count + formatted;
    // Partial Fisher-Yates: the first `picks` slots become a uniform random prefix.
    for (std::uint64_t i = 0; i < picks && i + 1 < n; ++i) {
        const std::uint64_t j = i + rng.below(n - i);
        std::swap(order[i], order[j]);
    }
    std::vector<double> rewards(n, kIncorrectReward);
    for (std::uint64_t i = 0; i < optimal_count; ++i) rewards[order[i]] = kAccuracyReward;
    for (std::uint64_t i = optimal_count; i < picks; ++i) rewards[order[i]] = kFormatReward;

    TreeSpec spec;
    spec.flavor = "adversarial";
    spec.optimal_count = optimal_count;
    spec.format_fraction = format_fraction;
    spec.seed = seed;
    return SearchTree(branching, height, std::move(rewards), kAccuracyReward - kFormatReward, spec);
}

/// Exact rational used by the Countdown environment.
struct Rational {
    long long num = 0;
    long long den = 1;

    static Rational make(long long n, long long d) {
        if (d < 0) n = -n, d = -d;
        const long long g = std::gcd(n < 0 ? -n : n, d);
        return g > 1 ? Rational{n / g, d / g} : Rational{n, d};
    }
    friend bool operator==(const Rational&, const Rational&) = default;
};

namespace detail {

enum class CountdownOp { add, sub, mul, div };

inline bool apply_op(CountdownOp op, Rational x, Rational y, Rational& out) {
    switch (op) {
        case CountdownOp::add: out = Rational::make(x.num * y.den + y.num * x.den, x.den * y.den); return true;
        case CountdownOp::sub: out = Rational::make(x.num * y.den - y.num * x.den, x.den * y.den); return true;
        case CountdownOp::mul: out = Rational::make(x.num * y.num, x.den * y.den); return true;
        case CountdownOp::div:
            if (y.num == 0) return false;
            out = Rational::make(x.num * y.den, x.den * y.num);
            return true;
    }
    return false;
}

inline void countdown_fill(const std::vector<Rational>& values, int depth, int height, int branching,
                           std::uint64_t index, Rational target, std::vector<double>& rewards) {
    if (depth == height) {
        rewards[index] = values.front() == target ? kAccuracyReward : kFormatReward;
        return;
    }
    const int m = static_cast<int>(values.size());
    int a = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            for (int op = 0; op < 4; ++op, ++a) {
                const std::uint64_t child = index * branching + a;
                Rational result;
                if (!apply_op(static_cast<CountdownOp>(op), values[i], values[j], result)) continue;  // stays 0.0
                std::vector<Rational> next;
                next.reserve(m - 1);
                for (int k = 0; k < m; ++k)
                    if (k != i && k != j) next.push_back(values[k]);
                next.push_back(result);
                countdown_fill(next, depth + 1, height, branching, child, target, rewards);
            }
        }
    }
    // Actions a >= m(m-1)*4 are padding no-ops whose subtrees keep reward 0.0.
}

}  // namespace detail

/**
 * Countdown game as a padded search tree.
 *
 * A state is the list of remaining values. Action a = ((i * (m-1) + j') * 4 + op)
 * combines the ordered pair (values[i], values[j]) with op in {+, -, *, /},
 * where j' skips i. The result replaces the pair at the end of the list.
 * Height is count(numbers) - 1; every level is padded to B = n(n-1)*4 children.
 */
inline SearchTree build_countdown(const std::vector<long long>& numbers, long long target) {
    const int n = static_cast<int>(numbers.size());
    if (n < 2 || n > 4) throw invalid_parameter("countdown needs between 2 and 4 numbers");
    const int branching = n * (n - 1) * 4;
    const int height = n - 1;
    std::vector<double> rewards(checked_pow(static_cast<std::uint64_t>(branching), height), kIncorrectReward);
    std::vector<Rational> values;
    for (long long v : numbers) values.push_back(Rational{v, 1});
    detail::countdown_fill(values, 0, height, branching, 0, Rational{target, 1}, rewards);
    TreeSpec spec;
    spec.flavor = "countdown";
    spec.numbers = numbers;
    spec.target = target;
    return SearchTree(branching, height, std::move(rewards), 0.0, spec);
}

/// Rebuilds a tree from its construction record.
inline SearchTree build_from_spec(const TreeSpec& spec) {
    if (spec.flavor == "adversarial")
        return build_adversarial(spec.branching, spec.height, spec.optimal_count, spec.format_fraction, spec.seed);
    if (spec.flavor == "countdown") return build_countdown(spec.numbers, spec.target);
    throw invalid_parameter("cannot rebuild tree of flavor '" + spec.flavor + "'");
}

}  // namespace uft
