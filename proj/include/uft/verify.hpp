#pragma once

#include "harness.hpp"
#include "hint_schedule.hpp"
#include "policy.hpp"
#include "rng.hpp"
#include "trainer.hpp"
#include "tree.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace uft {

enum class VerifyLevel { fast, full };

struct PropertyResult {
    std::string module;
    std::string name;
    bool passed = true;
    std::string counterexample;
    double seconds = 0.0;
};

/// Random tree with rewards drawn from {0.0, 0.1, 1.0}.
inline SearchTree random_tree(int b, int h, Rng& rng) {
    const std::uint64_t n = checked_pow(b, h);
    std::vector<double> r(n);
    const double levels[] = {kIncorrectReward, kFormatReward, kAccuracyReward};
    for (auto& x : r) x = levels[rng.below(3)];
    return SearchTree(b, h, std::move(r));
}

/// Logits drawn uniformly from [-scale, scale].
inline Policy random_policy(const SearchTree& tree, Rng& rng, double scale = 2.0) {
    Policy p(tree);
    for (std::size_t id = 0; id < p.internal_count(); ++id)
        for (double& x : p.logits_by_id(id)) x = scale * (2.0 * rng.uniform() - 1.0);
    return p;
}

namespace detail {

using Check = std::function<std::optional<std::string>(VerifyLevel, Rng&)>;

struct Property {
    const char* module;
    const char* name;
    bool full_only;
    Check check;
};

template <typename... Args>
std::string describe(Args&&... args) {
    std::ostringstream os;
    os.precision(12);
    (os << ... << args);
    return os.str();
}

using CosineFn = std::function<double(int, int, double, double)>;

/// First (t, p) where fn rises or misses p_low at t = T_hint - 1, over random parameters.
inline std::optional<std::string> cosine_counterexample(const CosineFn& fn, Rng& rng) {
    for (int k = 0; k < 50; ++k) {
        const double lo = rng.uniform(), hi = lo + (1.0 - lo) * rng.uniform();
        const int th = 2 + static_cast<int>(rng.below(400));
        double prev = 2.0;
        for (int t = 0; t < th; ++t) {
            const double p = fn(t, th, lo, hi);
            if (p > prev + 1e-15)
                return describe("(t, p) = (", t, ", ", p, ") after ", prev, " with T_hint=", th, " p_low=", lo,
                                " p_high=", hi);
            prev = p;
        }
        if (std::abs(prev - lo) > 1e-12) return describe("(t, p) = (", th - 1, ", ", prev, ") but p_low = ", lo);
    }
    return std::nullopt;
}

inline std::vector<Property> properties() {
    std::vector<Property> ps;

    ps.push_back({"tree_env", "transition is total and parent(T(s,a)) = s", false,
                  [](VerifyLevel, Rng&) -> std::optional<std::string> {
                      for (int b = 2; b <= 4; ++b)
                          for (int h = 1; h <= 5; ++h) {
                              const SearchTree t(b, h, std::vector<double>(checked_pow(b, h), 0.0));
                              for (int d = 0; d < h; ++d)
                                  for (std::uint64_t i = 0; i < t.nodes_at(d); ++i)
                                      for (int a = 0; a < b; ++a) {
                                          const NodeRef c = transition(t, {d, i}, a);
                                          if (!(t.parent(c) == NodeRef{d, i}) || !t.contains(c))
                                              return describe("B=", b, " H=", h, " node=(", d, ",", i, ") a=", a);
                                      }
                          }
                      return std::nullopt;
                  }});

    ps.push_back({"tree_env", "leaf and node counts match closed forms", false,
                  [](VerifyLevel, Rng&) -> std::optional<std::string> {
                      for (int b = 2; b <= 4; ++b)
                          for (int h = 1; h <= 8; ++h) {
                              const SearchTree t(b, h, std::vector<double>(checked_pow(b, h), 0.0));
                              std::uint64_t nodes = 0;
                              for (int d = 0; d <= h; ++d) nodes += t.nodes_at(d);
                              const auto bh = static_cast<std::uint64_t>(std::llround(std::pow(b, h)));
                              if (t.leaf_count() != bh || nodes != (bh * b - 1) / (b - 1) || t.node_count() != nodes)
                                  return describe("B=", b, " H=", h);
                          }
                      return std::nullopt;
                  }});

    ps.push_back({"tree_env", "adversarial build is seed-deterministic; K = B^H gives all-optimal", false,
                  [](VerifyLevel lvl, Rng& rng) -> std::optional<std::string> {
                      const int reps = lvl == VerifyLevel::fast ? 20 : 200;
                      for (int k = 0; k < reps; ++k) {
                          const int b = 2 + static_cast<int>(rng.below(3));
                          const int h = 1 + static_cast<int>(rng.below(5));
                          const std::uint64_t seed = rng();
                          const auto n = checked_pow(b, h);
                          const std::uint64_t kk = 1 + rng.below(n);
                          if (build_adversarial(b, h, kk, 0.5, seed).leaf_rewards() !=
                              build_adversarial(b, h, kk, 0.5, seed).leaf_rewards())
                              return describe("B=", b, " H=", h, " K=", kk, " seed=", seed);
                          const auto all = build_adversarial(b, h, n, 0.5, seed);
                          for (double r : all.leaf_rewards())
                              if (r != kAccuracyReward) return describe("K=B^H B=", b, " H=", h);
                      }
                      return std::nullopt;
                  }});

    ps.push_back({"tree_env", "optimal_path leaf equals exhaustive maximum; gap property", false,
                  [](VerifyLevel lvl, Rng& rng) -> std::optional<std::string> {
                      const int reps = lvl == VerifyLevel::fast ? 50 : 500;
                      for (int k = 0; k < reps; ++k) {
                          const int b = 2 + static_cast<int>(rng.below(3));
                          const int h = 1 + static_cast<int>(rng.below(b == 2 ? 13 : (b == 3 ? 8 : 6)));
                          const auto t = random_tree(b, h, rng);
                          const auto path = optimal_path(t);
                          double mx = 0.0;
                          for (double r : t.leaf_rewards()) mx = std::max(mx, r);
                          if (reward(t, path.nodes.back()) != mx) return describe("B=", b, " H=", h, " path misses max");
                          for (double r : t.leaf_rewards())
                              if (r < mx && r > mx - t.gap() + 1e-12) return describe("gap violated B=", b, " H=", h);
                      }
                      return std::nullopt;
                  }});

    ps.push_back({"policy_core", "softmax normalization and shift invariance", false,
                  [](VerifyLevel lvl, Rng& rng) -> std::optional<std::string> {
                      const int reps = lvl == VerifyLevel::fast ? 2000 : 20000;
                      for (int k = 0; k < reps; ++k) {
                          const int b = 2 + static_cast<int>(rng.below(7));
                          std::vector<double> th(b), shifted(b);
                          const double c = 20.0 * (rng.uniform() - 0.5);
                          for (int a = 0; a < b; ++a) {
                              th[a] = 10.0 * (rng.uniform() - 0.5);
                              shifted[a] = th[a] + c;
                          }
                          const auto p = softmax(th), q = softmax(shifted);
                          double sum = 0.0;
                          for (int a = 0; a < b; ++a) {
                              sum += p[a];
                              if (p[a] < 0.0 || std::abs(p[a] - q[a]) > 1e-12) return describe("shift c=", c, " a=", a);
                          }
                          if (std::abs(sum - 1.0) > 1e-12) return describe("sum=", sum);
                      }
                      return std::nullopt;
                  }});

    ps.push_back({"policy_core", "Bellman consistency V = sum pi Q; reach-probability conservation", false,
                  [](VerifyLevel lvl, Rng& rng) -> std::optional<std::string> {
                      const int reps = lvl == VerifyLevel::fast ? 20 : 200;
                      for (int k = 0; k < reps; ++k) {
                          const int b = 2 + static_cast<int>(rng.below(2));
                          const int h = 1 + static_cast<int>(rng.below(4));
                          const auto t = random_tree(b, h, rng);
                          const auto pi = random_policy(t, rng);
                          for (int d = 0; d < h; ++d) {
                              double mass = 0.0;
                              for (std::uint64_t i = 0; i < t.nodes_at(d); ++i) {
                                  const NodeRef s{d, i};
                                  const auto p = action_probs(pi, s);
                                  double v = 0.0;
                                  for (int a = 0; a < b; ++a) v += p[a] * exact_q(pi, t, s, a);
                                  if (std::abs(v - exact_value(pi, t, s)) > 1e-12)
                                      return describe("Bellman at (", d, ",", i, ")");
                                  mass += reach_prob(pi, t, s);
                              }
                              if (std::abs(mass - 1.0) > 1e-12) return describe("mass at height ", d, " = ", mass);
                          }
                      }
                      return std::nullopt;
                  }});

    ps.push_back({"policy_core", "exact pass@1 matches rollout success rate (4 s.e.)", false,
                  [](VerifyLevel lvl, Rng& rng) -> std::optional<std::string> {
                      const int n = lvl == VerifyLevel::fast ? 20000 : 100000;
                      const auto t = build_adversarial(2, 4, 2, 0.5, rng());
                      const auto pi = random_policy(t, rng, 1.0);
                      const double p = exact_pass_at_1(pi, t);
                      int hits = 0;
                      for (int k = 0; k < n; ++k)
                          hits += sample_trajectory(pi, t, kRoot, rng).terminal_reward == t.optimal_reward();
                      const double se = std::sqrt(p * (1 - p) / n);
                      if (std::abs(hits / double(n) - p) > 4 * se) return describe("exact=", p, " empirical=", hits / double(n));
                      return std::nullopt;
                  }});

    ps.push_back({"policy_core", "regret decomposition identity (1e-9)", true,
                  [](VerifyLevel, Rng& rng) -> std::optional<std::string> {
                      for (int k = 0; k < 20; ++k) {
                          const int b = 2 + static_cast<int>(rng.below(2));
                          const int h = 1 + static_cast<int>(rng.below(4));
                          const auto t = random_tree(b, h, rng);
                          const auto pi = random_policy(t, rng);
                          std::vector<Policy> seq;
                          for (int i = 0; i < 5; ++i) seq.push_back(random_policy(t, rng));
                          double lhs = 0.0, rhs = 0.0;
                          for (const auto& pt : seq) lhs += exact_value(pi, t, kRoot) - exact_value(pt, t, kRoot);
                          for (int d = 0; d < h; ++d)
                              for (std::uint64_t i = 0; i < t.nodes_at(d); ++i) {
                                  const NodeRef s{d, i};
                                  const double mu = reach_prob(pi, t, s);
                                  const auto p = action_probs(pi, s);
                                  for (const auto& pt : seq) {
                                      const auto q = action_probs(pt, s);
                                      for (int a = 0; a < b; ++a) rhs += mu * exact_q(pt, t, s, a) * (p[a] - q[a]);
                                  }
                              }
                          if (std::abs(lhs - rhs) > 1e-9) return describe("B=", b, " H=", h, " lhs=", lhs, " rhs=", rhs);
                      }
                      return std::nullopt;
                  }});

    ps.push_back({"policy_core", "KL(pi* || pi_ref) <= log B + 2 ||theta_ref||_inf", true,
                  [](VerifyLevel, Rng& rng) -> std::optional<std::string> {
                      for (int k = 0; k < 10000; ++k) {
                          const int b = 2 + static_cast<int>(rng.below(7));
                          const double norm = 3.0 * rng.uniform();
                          std::vector<double> th(b);
                          double mx = 0.0;
                          for (auto& x : th) {
                              x = norm * (2.0 * rng.uniform() - 1.0);
                              mx = std::max(mx, std::abs(x));
                          }
                          std::vector<double> star(b, 0.0);
                          star[rng.below(b)] = 1.0;
                          const double kl = kl_div(star, softmax(th));
                          if (kl > std::log(double(b)) + 2.0 * mx + 1e-12) return describe("B=", b, " KL=", kl);
                      }
                      return std::nullopt;
                  }});

    ps.push_back({"hint_schedule", "cosine_fraction nonincreasing, p_low at t = T_hint - 1", false,
                  [](VerifyLevel, Rng& rng) { return cosine_counterexample(cosine_fraction, rng); }});

    ps.push_back({"hint_schedule", "two-point law has E[l] = p L", false,
                  [](VerifyLevel lvl, Rng& rng) -> std::optional<std::string> {
                      for (int k = 0; k < 1000; ++k) {
                          const int len = static_cast<int>(rng.below(13));
                          const double p = rng.uniform();
                          const double m = p * len, n = std::floor(m);
                          const double e = n >= len ? len : n * (n + 1 - m) + (n + 1) * (m - n);
                          if (std::abs(e - m) > 1e-12) return describe("L=", len, " p=", p, " E=", e);
                      }
                      const int draws = lvl == VerifyLevel::fast ? 20000 : 100000;
                      for (double p : {0.13, 0.5, 0.77}) {
                          double sum = 0.0;
                          for (int k = 0; k < draws; ++k) sum += sample_two_point(7, p, rng);
                          // per-draw variance of a two-point law on adjacent integers is <= 1/4
                          if (std::abs(sum / draws - 7 * p) > 4 * 0.5 / std::sqrt(double(draws)))
                              return describe("L=7 p=", p, " mean=", sum / draws);
                      }
                      return std::nullopt;
                  }});

    ps.push_back({"hint_schedule", "binomial sampler pmf chi-square p > 0.001", false,
                  [](VerifyLevel lvl, Rng& rng) -> std::optional<std::string> {
                      const int draws = lvl == VerifyLevel::fast ? 100000 : 1000000;
                      for (int len : {3, 10})
                          for (double p : {0.1, 0.5, 0.9}) {
                              std::vector<double> counts(len + 1, 0.0);
                              for (int k = 0; k < draws; ++k) counts[sample_binomial(len, p, rng)] += 1.0;
                              double chi2 = 0.0;
                              int cells = 0;
                              for (int x = 0; x <= len; ++x) {
                                  const double e = draws * std::exp(std::lgamma(len + 1.0) - std::lgamma(x + 1.0) -
                                                                    std::lgamma(len - x + 1.0)) *
                                                   std::pow(p, x) * std::pow(1 - p, len - x);
                                  if (e < 5.0) continue;
                                  chi2 += (counts[x] - e) * (counts[x] - e) / e;
                                  ++cells;
                              }
                              if (cells < 2) continue;
                              const boost::math::chi_squared dist(cells - 1);
                              const double pv = boost::math::cdf(boost::math::complement(dist, chi2));
                              if (pv <= 0.001) return describe("L=", len, " p=", p, " chi2=", chi2, " p-value=", pv);
                          }
                      return std::nullopt;
                  }});

    ps.push_back({"hint_schedule", "uniform variant frequencies 1/(L+1) (4 s.e.); zero hint after T_hint", false,
                  [](VerifyLevel lvl, Rng& rng) -> std::optional<std::string> {
                      const int draws = lvl == VerifyLevel::fast ? 60000 : 300000;
                      const int len = 5;
                      std::vector<int> c(len + 1, 0);
                      for (int k = 0; k < draws; ++k) ++c[sample_length(schedule::Uniform{}, 0, len, rng)];
                      const double f = 1.0 / (len + 1), se = std::sqrt(f * (1 - f) / draws);
                      for (int x = 0; x <= len; ++x)
                          if (std::abs(c[x] / double(draws) - f) > 4 * se) return describe("l=", x, " freq=", c[x] / double(draws));
                      const std::vector<HintSchedule> late{schedule::CosineBinomial{0.05, 0.95, 30},
                                                           schedule::CosineTwoPoint{0.05, 0.95, 30}, schedule::Staged{3, 30}};
                      for (const auto& s : late)
                          for (int t = 30; t < 60; ++t)
                              if (sample_length(s, t, len, rng) != 0) return describe(schedule_tag(s), " at t=", t);
                      return std::nullopt;
                  }});

    ps.push_back({"trainer", "updates keep distributions valid; advantages are centered", false,
                  [](VerifyLevel lvl, Rng& rng) -> std::optional<std::string> {
                      const int reps = lvl == VerifyLevel::fast ? 2000 : 20000;
                      for (int k = 0; k < reps; ++k) {
                          const int b = 2 + static_cast<int>(rng.below(5));
                          Policy pol(b, 1);
                          for (double& x : pol.logits(kRoot)) x = 6.0 * (rng.uniform() - 0.5);
                          std::vector<double> q(b), ref(b);
                          for (int a = 0; a < b; ++a) q[a] = rng.uniform(), ref[a] = 2.0 * (rng.uniform() - 0.5);
                          const auto adv = advantage_from_q(q, action_probs(pol, kRoot));
                          const auto p = action_probs(pol, kRoot);
                          double c = 0.0;
                          for (int a = 0; a < b; ++a) c += p[a] * adv[a];
                          if (std::abs(c) > 1e-12) return describe("<pi, A> = ", c);
                          const auto p1 = update_on_trajectory_node(pol, kRoot, adv, ref, rng.uniform(), rng.uniform());
                          const auto p2 = update_on_hint_node(pol, kRoot, static_cast<int>(rng.below(b)), rng.uniform(), rng.uniform());
                          for (const auto* pv : {&p1, &p2}) {
                              double s = 0.0;
                              for (double x : *pv) s += x;
                              if (std::abs(s - 1.0) > 1e-12) return describe("updated mass ", s);
                          }
                      }
                      return std::nullopt;
                  }});

    ps.push_back({"trainer", "one-step update bound (1e-9)", true,
                  [](VerifyLevel, Rng& rng) -> std::optional<std::string> {
                      for (int k = 0; k < 1000; ++k) {
                          const int b = 2 + static_cast<int>(rng.below(5));
                          Policy pol(b, 1);
                          for (double& x : pol.logits(kRoot)) x = 4.0 * (rng.uniform() - 0.5);
                          std::vector<double> adv(b), ref(b), star(b, 0.0);
                          for (int a = 0; a < b; ++a) adv[a] = 2.0 * rng.uniform() - 1.0, ref[a] = 2.0 * (rng.uniform() - 0.5);
                          star[rng.below(b)] = 1.0;
                          const double eta = rng.uniform(), beta = rng.uniform();
                          const auto old = action_probs(pol, kRoot);
                          const auto pref = softmax(ref);
                          const auto fresh = update_on_trajectory_node(pol, kRoot, adv, ref, eta, beta);
                          double lhs = 0.0;
                          for (int a = 0; a < b; ++a) lhs += eta * adv[a] * (star[a] - fresh[a]);
                          const double rhs = kl_div(star, old) - kl_div(star, fresh) - kl_div(fresh, old) +
                                             eta * beta * kl_div(star, pref);
                          if (lhs > rhs + 1e-9) return describe("lhs=", lhs, " rhs=", rhs);
                      }
                      return std::nullopt;
                  }});

    ps.push_back({"trainer", "telescoped advantage bound over random proximal sequences", true,
                  [](VerifyLevel, Rng& rng) -> std::optional<std::string> {
                      for (int k = 0; k < 200; ++k) {
                          const int b = 2 + static_cast<int>(rng.below(4));
                          const int steps = 1 + static_cast<int>(rng.below(300));
                          const double eta = 1.0 / std::sqrt(double(steps)), beta = 0.1 * rng.uniform();
                          Policy pol(b, 1);
                          std::vector<double> ref(b), star(b, 0.0);
                          for (double& x : ref) x = 2.0 * (rng.uniform() - 0.5);
                          std::copy(ref.begin(), ref.end(), pol.logits(kRoot).begin());
                          star[rng.below(b)] = 1.0;
                          double sum = 0.0;
                          for (int t = 0; t < steps; ++t) {
                              const auto p = action_probs(pol, kRoot);
                              std::vector<double> q(b);
                              for (double& x : q) x = rng.uniform();
                              const auto adv = advantage_from_q(q, p);
                              for (int a = 0; a < b; ++a) sum += adv[a] * (star[a] - p[a]);
                              update_on_trajectory_node(pol, kRoot, adv, ref, eta, beta);
                          }
                          const double bound =
                              (1.0 / eta + beta * steps) * kl_div(star, softmax(ref)) + 2.0 * eta * steps;
                          if (sum > bound + 1e-9) return describe("B=", b, " T=", steps, " sum=", sum, " bound=", bound);
                      }
                      return std::nullopt;
                  }});

    ps.push_back({"trainer", "telescoped advantage bound at every node of full uft-theory runs", true,
                  [](VerifyLevel, Rng& rng) -> std::optional<std::string> {
                      for (int seed = 0; seed < 10; ++seed) {
                          const int h = 1 + seed % 2;
                          const auto t = build_adversarial(2, h, 1, 0.5, rng());
                          const TrainConfig cfg = make_preset("uft-theory", t, {.steps = 300});
                          const auto path = optimal_path(t);
                          const Policy star_pol = greedy_policy(t);
                          Policy pol(t);
                          Rng r(rng());
                          std::vector<double> sum(t.internal_count(), 0.0);
                          for (int step = 0; step < cfg.steps; ++step) {
                              const Policy before = pol;
                              const auto rep = uft_step(pol, t, path, cfg, step, r);
                              for (std::size_t k = 0; k < rep.trajectory.steps.size(); ++k) {
                                  const NodeRef s = rep.trajectory.steps[k].node;
                                  const auto p = action_probs(before, s);
                                  const auto star = action_probs(star_pol, s);
                                  for (int a = 0; a < 2; ++a)
                                      sum[t.internal_id(s)] += rep.advantages[k][a] * (std::round(star[a]) - p[a]);
                              }
                          }
                          for (int d = 0; d < h; ++d)
                              for (std::uint64_t i = 0; i < t.nodes_at(d); ++i) {
                                  const NodeRef s{d, i};
                                  auto star = action_probs(star_pol, s);
                                  for (double& x : star) x = std::round(x);
                                  const double bound = (1.0 / cfg.eta + cfg.beta * cfg.steps) *
                                                           kl_div(star, std::vector<double>(2, 0.5)) +
                                                       2.0 * cfg.eta * cfg.steps;
                                  if (sum[t.internal_id(s)] > bound + 1e-9)
                                      return describe("H=", h, " node (", d, ",", i, ") sum=", sum[t.internal_id(s)],
                                                      " bound=", bound);
                              }
                      }
                      return std::nullopt;
                  }});

    ps.push_back({"trainer", "Zero schedule reproduces rft; Full touches only the hint prefix; r3 never updates prefix", false,
                  [](VerifyLevel, Rng& rng) -> std::optional<std::string> {
                      const auto t = build_adversarial(2, 4, 1, 0.5, rng());
                      const std::uint64_t seed = rng();
                      TrainConfig rft = make_preset("rft", t, {.steps = 50, .seed = seed});
                      TrainConfig zero = make_preset("uft-practical", t, {.steps = 50, .seed = seed});
                      zero.schedule = schedule::Zero{};
                      if (!(train(rft, t).policy == train(zero, t).policy)) return std::string("zero-schedule run diverged from rft");
                      const auto path = optimal_path(t);
                      TrainConfig sft = make_preset("sft", t, {.steps = 1});
                      Policy pol(t);
                      Rng r(seed);
                      for (int step = 0; step < 30; ++step) uft_step(pol, t, path, sft, step, r);
                      for (int d = 0; d < t.height(); ++d)
                          for (std::uint64_t i = 0; i < t.nodes_at(d); ++i) {
                              const bool on_prefix = path.nodes[d] == NodeRef{d, i};
                              const auto row = pol.logits({d, i});
                              const bool touched = std::any_of(row.begin(), row.end(), [](double x) { return x != 0.0; });
                              if (touched && !on_prefix) return describe("Full schedule touched (", d, ",", i, ")");
                          }
                      TrainConfig r3 = make_preset("r3", t, {.steps = 1});
                      Policy p3(t);
                      for (int step = 0; step < 200; ++step) {
                          const Policy before = p3;
                          const auto rep = uft_step(p3, t, path, r3, step, r);
                          for (int d = 0; d < rep.hint_length; ++d)
                              if (!std::equal(before.logits(path.nodes[d]).begin(), before.logits(path.nodes[d]).end(),
                                              p3.logits(path.nodes[d]).begin()))
                                  return describe("r3 updated prefix node at height ", d);
                      }
                      return std::nullopt;
                  }});

    ps.push_back({"harness", "sweep rows are deterministic; leaf accounting audits", false,
                  [](VerifyLevel lvl, Rng&) -> std::optional<std::string> {
                      SweepSpec spec;
                      spec.algorithms = {"rft", "uft-practical"};
                      spec.branchings = {2};
                      spec.heights = {2, 3};
                      spec.seeds = lvl == VerifyLevel::fast ? 2 : 5;
                      spec.options.steps = 200;
                      spec.options.t_hint = 120;
                      if (sweep(spec) != sweep(spec)) return std::string("sweep output differs between identical runs");
                      const auto t = build_adversarial(2, 3, 1, 0.5, 5);
                      const auto res = train(make_preset("uft-theory", t, {.steps = 300}), t);
                      std::uint64_t sum = 0, prev = 0;
                      for (const auto& r : res.metrics.steps) {
                          sum += r.leaves_step;
                          if (r.leaves_total < prev || r.leaves_distinct > r.leaves_total) return describe("counters at t=", r.t);
                          prev = r.leaves_total;
                      }
                      const auto initial = res.metrics.steps.empty() ? 0 : res.metrics.steps.front().leaves_total -
                                                                              res.metrics.steps.front().leaves_step;
                      if (sum + initial != res.metrics.leaves_total)
                          return describe("per-step sum ", sum + initial, " != total ", res.metrics.leaves_total);
                      return std::nullopt;
                  }});

    return ps;
}

}  // namespace detail

/// Runs every property at the chosen scale, printing one line per property.
inline std::vector<PropertyResult> run_properties(VerifyLevel level, std::ostream* out = nullptr,
                                                  std::uint64_t seed = 20240601) {
    std::vector<PropertyResult> results;
    Rng rng(seed);
    for (const auto& p : detail::properties()) {
        if (p.full_only && level == VerifyLevel::fast) continue;
        PropertyResult r{p.module, p.name};
        const auto t0 = std::chrono::steady_clock::now();
        try {
            if (auto ce = p.check(level, rng)) {
                r.passed = false;
                r.counterexample = *ce;
            }
        } catch (const std::exception& e) {
            r.passed = false;
            r.counterexample = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (out) {
            *out << (r.passed ? "PASS " : "FAIL ") << '[' << r.module << "] " << r.name;
            if (!r.passed) *out << "\n     counterexample: " << r.counterexample;
            *out << '\n';
            out->flush();
        }
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace uft
