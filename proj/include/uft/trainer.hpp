#pragma once

#include "error.hpp"
#include "hint_schedule.hpp"
#include "policy.hpp"
#include "rng.hpp"
#include "tree.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uft {

/// Floor on pi_old(a*) in the hint-node update; keeps beta / pi_old finite.
inline constexpr double kMinHintProb = 1e-12;

struct TrainConfig {
    std::string preset = "custom";
    double eta = 0.1;
    double beta = 0.0;
    int steps = 500;  // T
    HintSchedule schedule = schedule::Uniform{};
    bool hint_loglik_enabled = true;
    std::uint64_t seed = 0;
    /// Rollouts per iterate for best-iterate selection; 0 returns the last iterate.
    std::uint64_t selection_samples = 0;
    /// Stop before a step whose worst-case leaf cost would exceed this total; 0 disables.
    std::uint64_t leaf_budget = 0;
    /// theta^ref; zero logits when absent.
    std::optional<Policy> reference;
};

/// beta upper bound Delta / (12 (H+1)^2 (log B + 2 ||theta^ref||_inf)).
inline double default_beta(const SearchTree& tree, double ref_logits_max) {
    const double h1 = tree.height() + 1.0;
    return tree.gap() / (12.0 * h1 * h1 * (std::log(static_cast<double>(tree.branching())) + 2.0 * ref_logits_max));
}

/// N = ceil(72 log(14 (T + 1)) / Delta^2).
inline std::uint64_t default_selection_samples(int steps, double gap) {
    if (steps < 0) throw invalid_parameter("T must be >= 0");
    if (!(gap > 0.0)) throw invalid_parameter("gap must be > 0");
    return static_cast<std::uint64_t>(std::ceil(72.0 * std::log(14.0 * (steps + 1.0)) / (gap * gap)));
}

/// One rollout per action from each child of s; entry a is that rollout's terminal reward.
inline std::vector<double> group_q_estimate(const Policy& policy, const SearchTree& tree, NodeRef s, Rng& rng,
                                            LeafCounter* counter = nullptr) {
    if (tree.is_leaf(s)) throw invalid_parameter("group estimate at a leaf");
    std::vector<double> q(tree.branching());
    for (int a = 0; a < tree.branching(); ++a)
        q[a] = sample_trajectory(policy, tree, tree.child(s, a), rng, counter).terminal_reward;
    return q;
}

/// A = Q - <probs, Q> 1.
inline std::vector<double> advantage_from_q(std::span<const double> q, std::span<const double> probs) {
    if (q.size() != probs.size()) throw invalid_parameter("advantage: length mismatch");
    double baseline = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) baseline += probs[a] * q[a];
    std::vector<double> adv(q.size());
    for (std::size_t a = 0; a < q.size(); ++a) adv[a] = q[a] - baseline;
    return adv;
}

/**
 * KL-proximal update at a node on the sampled suffix:
 *   argmin_pi <-A, pi> + beta KL(pi || pi_ref) + (1/eta) KL(pi || pi_old),
 * realized in logit space as theta' = (eta A + eta beta theta_ref + theta) / (1 + eta beta).
 * Returns the new action distribution at s.
 */
inline std::vector<double> update_on_trajectory_node(Policy& policy, NodeRef s, std::span<const double> adv,
                                                     std::span<const double> ref_logits, double eta, double beta) {
    auto row = policy.logits(s);
    if (adv.size() != row.size() || ref_logits.size() != row.size())
        throw invalid_parameter("trajectory-node update: length mismatch");
    const double scale = 1.0 / (1.0 + eta * beta);
    for (std::size_t a = 0; a < row.size(); ++a) row[a] = (eta * adv[a] + eta * beta * ref_logits[a] + row[a]) * scale;
    return softmax(row);
}

/**
 * Log-likelihood update at a hint-prefix node: theta'(s, a*) += eta * beta / pi_old(a* | s),
 * i.e. pi_new proportional to pi_old * exp(eta g) with g one-hot at a*.
 */
inline std::vector<double> update_on_hint_node(Policy& policy, NodeRef s, int a_star, double eta, double beta) {
    auto row = policy.logits(s);
    if (a_star < 0 || a_star >= static_cast<int>(row.size())) throw invalid_parameter("hint action out of range");
    const double p_star = std::max(softmax(row)[a_star], kMinHintProb);
    row[a_star] += eta * beta / p_star;
    return softmax(row);
}

inline std::span<const double> reference_logits(const std::optional<Policy>& reference, NodeRef s,
                                                std::span<const double> zeros) {
    return reference ? reference->logits(s) : zeros;
}

/**
 * J = sum_{h>=l} <pi(.|s_h), A(s_h,.)> - beta sum_{h>=l} KL(pi(.|s_h) || pi_ref(.|s_h))
 *     + beta sum_{h<l} log pi(a*_h | s*_h),
 * evaluated at the current policy. advantages[k] belongs to traj.steps[k].
 */
inline double objective_value(const Policy& policy, const SearchTree& tree, const Trajectory& traj,
                              const std::vector<std::vector<double>>& advantages, double beta,
                              const std::optional<Policy>& reference, const OptimalPath& path, int hint_length,
                              bool include_loglik = true) {
    if (advantages.size() != traj.steps.size()) throw invalid_parameter("objective: one advantage row per step");
    const std::vector<double> zeros(tree.branching(), 0.0);
    double j = 0.0;
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
        const NodeRef s = traj.steps[k].node;
        const auto p = action_probs(policy, s);
        for (std::size_t a = 0; a < p.size(); ++a) j += p[a] * advantages[k][a];
        const auto p_ref = softmax(reference_logits(reference, s, zeros));
        j -= beta * kl_div(p, p_ref);
    }
    if (include_loglik)
        for (int h = 0; h < hint_length; ++h) j += beta * std::log(action_probs(policy, path.nodes[h])[path.actions[h]]);
    return j;
}

struct StepReport {
    int t = 0;
    int hint_length = 0;
    Trajectory trajectory;
    std::vector<std::vector<double>> q_estimates;  // per trajectory step
    std::vector<std::vector<double>> advantages;   // per trajectory step
    double objective = 0.0;
    std::uint64_t leaves_explored = 0;
};

/**
 * One iteration of hint-started training: draw l, roll out from s*_l, group-estimate
 * Q and A at every suffix node, then apply the suffix (and optionally prefix) updates.
 * All estimates use the pre-update policy. Nodes off the prefix and suffix are untouched.
 */
inline StepReport uft_step(Policy& policy, const SearchTree& tree, const OptimalPath& path, const TrainConfig& cfg,
                           int t, Rng& rng, LeafCounter* counter = nullptr) {
    const std::uint64_t before = counter ? counter->total() : 0;
    StepReport rep;
    rep.t = t;
    rep.hint_length = sample_length(cfg.schedule, t, tree.height(), rng);
    rep.trajectory = sample_trajectory(policy, tree, path.nodes[rep.hint_length], rng, counter);
    for (const auto& step : rep.trajectory.steps) {
        auto q = group_q_estimate(policy, tree, step.node, rng, counter);
        rep.advantages.push_back(advantage_from_q(q, action_probs(policy, step.node)));
        rep.q_estimates.push_back(std::move(q));
    }
    rep.objective = objective_value(policy, tree, rep.trajectory, rep.advantages, cfg.beta, cfg.reference, path,
                                    rep.hint_length, cfg.hint_loglik_enabled);

    const std::vector<double> zeros(tree.branching(), 0.0);
    for (std::size_t k = 0; k < rep.trajectory.steps.size(); ++k) {
        const NodeRef s = rep.trajectory.steps[k].node;
        update_on_trajectory_node(policy, s, rep.advantages[k], reference_logits(cfg.reference, s, zeros), cfg.eta,
                                  cfg.beta);
    }
    if (cfg.hint_loglik_enabled)
        for (int h = 0; h < rep.hint_length; ++h)
            update_on_hint_node(policy, path.nodes[h], path.actions[h], cfg.eta, cfg.beta);

    rep.leaves_explored = counter ? counter->total() - before : 0;
    return rep;
}

struct StepRecord {
    int t = 0;
    int hint_length = 0;
    double pass1_exact = 0.0;  // after the update
    double v_tilde = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t leaves_total = 0;
    std::uint64_t leaves_distinct = 0;
    double objective = 0.0;
    std::uint64_t leaves_step = 0;
};

struct RunMetrics {
    std::vector<StepRecord> steps;
    double initial_pass1 = 0.0;
    double initial_v_tilde = std::numeric_limits<double>::quiet_NaN();
    int selected_t = 0;  // index of the returned iterate theta^(t)
    double final_pass1 = 0.0;
    std::uint64_t leaves_total = 0;
    std::uint64_t leaves_distinct = 0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    Policy policy;
    RunMetrics metrics;
};

/**
 * Runs T steps from theta^(0) = theta^ref. With selection_samples = N > 0 every
 * iterate's root value is estimated from N rollouts and the argmax iterate is
 * returned (earliest on ties); otherwise the last iterate is returned.
 * Exact pass@1 is logged for diagnostics only. observer sees each post-update iterate.
 */
using StepObserver = std::function<void(const StepRecord&, const Policy&)>;

inline TrainResult train(const TrainConfig& cfg, const SearchTree& tree, const StepObserver& observer = {}) {
    if (cfg.steps < 0) throw invalid_parameter("T must be >= 0");
    if (!(cfg.eta > 0.0)) throw invalid_parameter("eta must be > 0");
    if (!(cfg.beta >= 0.0)) throw invalid_parameter("beta must be >= 0");
    if (cfg.reference && (cfg.reference->branching() != tree.branching() || cfg.reference->height() != tree.height()))
        throw invalid_parameter("reference policy shape does not match the tree");

    const auto clock_start = std::chrono::steady_clock::now();
    const OptimalPath path = optimal_path(tree);
    Policy policy = cfg.reference ? *cfg.reference : Policy(tree);
    Rng rng(derive_seed(cfg.seed, 1));
    Rng eval_rng(derive_seed(cfg.seed, 2));
    LeafCounter counter(tree.leaf_count());
    const std::uint64_t n_sel = cfg.selection_samples;
    const std::uint64_t worst_step = 1 + static_cast<std::uint64_t>(tree.branching()) * tree.height() + n_sel;

    RunMetrics m;
    m.initial_pass1 = exact_pass_at_1(policy, tree);
    Policy best = policy;
    double best_v = -1.0;
    if (n_sel > 0) {
        m.initial_v_tilde = mc_value(policy, tree, n_sel, eval_rng, &counter);
        best_v = m.initial_v_tilde;
    }

    for (int t = 0; t < cfg.steps; ++t) {
        if (cfg.leaf_budget > 0 && counter.total() + worst_step > cfg.leaf_budget) break;
        const std::uint64_t before = counter.total();
        const StepReport rep = uft_step(policy, tree, path, cfg, t, rng, &counter);
        StepRecord rec;
        rec.t = t;
        rec.hint_length = rep.hint_length;
        rec.objective = rep.objective;
        rec.pass1_exact = exact_pass_at_1(policy, tree);
        if (n_sel > 0) {
            rec.v_tilde = mc_value(policy, tree, n_sel, eval_rng, &counter);
            if (rec.v_tilde > best_v) {
                best_v = rec.v_tilde;
                best = policy;
                m.selected_t = t + 1;
            }
        }
        rec.leaves_total = counter.total();
        rec.leaves_distinct = counter.distinct();
        rec.leaves_step = counter.total() - before;
        m.steps.push_back(rec);
        if (observer) observer(rec, policy);
    }
    if (n_sel == 0) {
        best = policy;
        m.selected_t = static_cast<int>(m.steps.size());
    }
    m.final_pass1 = exact_pass_at_1(best, tree);
    m.leaves_total = counter.total();
    m.leaves_distinct = counter.distinct();
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    return {std::move(best), std::move(m)};
}

/// Knobs a preset may take from configuration; unset fields use preset defaults.
struct PresetOptions {
    int steps = 500;
    int t_hint = 300;
    double p_low = 0.05;
    double p_high = 0.95;
    int stage_count = 4;
    std::optional<double> eta;
    std::optional<double> beta;
    std::optional<std::uint64_t> selection_samples;
    std::uint64_t leaf_budget = 0;
    std::uint64_t seed = 0;
    /// Permits uft-theory with beta above its convergence bound.
    bool allow_unsafe_beta = false;
};

/// Step size shared by the practical presets.
inline constexpr double kPracticalEta = 0.01;
/// KL coefficient shared by the practical presets.
inline constexpr double kPracticalBeta = 0.001;

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"uft-theory", "uft-practical", "rft", "r3", "staged", "sft"};
    return names;
}

/**
 * Named algorithm configurations.
 *
 *   uft-theory     uniform l over {0..H}, prefix log-likelihood, eta = 1/sqrt(T),
 *                  beta = default_beta, N = default_selection_samples
 *   uft-practical  cosine-annealed binomial l, prefix log-likelihood
 *   rft            l = 0
 *   r3             uniform l, no prefix log-likelihood
 *   staged         staged l, no prefix log-likelihood
 *   sft            l = H, prefix log-likelihood only
 */
inline TrainConfig make_preset(const std::string& name, const SearchTree& tree, const PresetOptions& o = {}) {
    if (o.steps < 0) throw invalid_parameter("T must be >= 0");
    TrainConfig cfg;
    cfg.preset = name;
    cfg.steps = o.steps;
    cfg.seed = o.seed;
    cfg.leaf_budget = o.leaf_budget;
    if (name == "uft-theory") {
        const double bound = default_beta(tree, 0.0);
        cfg.schedule = schedule::Uniform{};
        cfg.hint_loglik_enabled = true;
        cfg.eta = o.eta.value_or(1.0 / std::sqrt(std::max(1, o.steps)));
        cfg.beta = o.beta.value_or(bound);
        cfg.selection_samples = o.selection_samples.value_or(default_selection_samples(o.steps, tree.gap()));
        if (cfg.beta > bound * (1.0 + 1e-12) && !o.allow_unsafe_beta)
            throw invalid_parameter("uft-theory: beta exceeds the convergence bound " + std::to_string(bound) +
                                    " (set allow_unsafe_beta to override)");
        return cfg;
    }
    cfg.eta = o.eta.value_or(kPracticalEta);
    cfg.beta = o.beta.value_or(kPracticalBeta);
    cfg.selection_samples = o.selection_samples.value_or(0);
    if (o.t_hint < 1) throw invalid_parameter("T_hint must be >= 1");
    if (!(0.0 <= o.p_low && o.p_low <= o.p_high && o.p_high <= 1.0))
        throw invalid_parameter("p_low <= p_high violated");
    if (name == "uft-practical") {
        cfg.schedule = schedule::CosineBinomial{o.p_low, o.p_high, o.t_hint};
        cfg.hint_loglik_enabled = true;
    } else if (name == "rft") {
        cfg.schedule = schedule::Zero{};
        cfg.hint_loglik_enabled = false;
    } else if (name == "r3") {
        cfg.schedule = schedule::Uniform{};
        cfg.hint_loglik_enabled = false;
    } else if (name == "staged") {
        if (o.stage_count < 1) throw invalid_parameter("stage_count must be >= 1");
        cfg.schedule = schedule::Staged{o.stage_count, o.t_hint};
        cfg.hint_loglik_enabled = false;
    } else if (name == "sft") {
        cfg.schedule = schedule::Full{};
        cfg.hint_loglik_enabled = true;
    } else {
        throw invalid_parameter("unknown preset '" + name + "'");
    }
    return cfg;
}

}  // namespace uft
