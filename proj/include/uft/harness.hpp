#pragma once

#include "error.hpp"
#include "rng.hpp"
#include "trainer.hpp"
#include "tree.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace uft {

struct SweepRow {
    std::string algorithm;
    int branching = 0;
    int height = 0;
    std::uint64_t optimal_count = 0;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> leaves_to_threshold;  // empty: not reached
    double final_pass1 = 0.0;
    std::string error;  // non-empty when the cell failed

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// Cumulative leaf visits at the first iterate whose exact pass@1 reaches threshold.
inline std::optional<std::uint64_t> first_crossing(const RunMetrics& m, double threshold) {
    if (m.initial_pass1 >= threshold) return std::uint64_t{0};
    for (const auto& rec : m.steps)
        if (rec.pass1_exact >= threshold) return rec.leaves_total;
    return std::nullopt;
}

inline SweepRow leaves_to_threshold(const TrainConfig& cfg, const SearchTree& tree, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw invalid_parameter("threshold must lie in (0, 1)");
    const auto result = train(cfg, tree);
    SweepRow row;
    row.algorithm = cfg.preset;
    row.branching = tree.branching();
    row.height = tree.height();
    row.optimal_count = tree.spec().optimal_count;
    row.seed = cfg.seed;
    row.leaves_to_threshold = first_crossing(result.metrics, threshold);
    row.final_pass1 = result.metrics.final_pass1;
    return row;
}

/// Worker count from UFT_WORKERS, else the hardware concurrency.
inline unsigned default_workers() {
    if (const char* env = std::getenv("UFT_WORKERS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, count) on a bounded pool; results are written by index.
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

struct SweepSpec {
    std::vector<std::string> algorithms;
    std::vector<int> branchings;
    std::vector<int> heights;
    std::uint64_t optimal_count = 1;
    int seeds = 10;
    std::uint64_t base_seed = 0;
    double format_fraction = 0.5;
    double threshold = 0.5;
    PresetOptions options;
    unsigned workers = 0;  // 0: default_workers()
};

/// Tree seed shared by every algorithm for one (B, H, K, seed) cell.
inline std::uint64_t cell_tree_seed(std::uint64_t seed, int b, int h, std::uint64_t k) {
    return derive_seed(seed, (static_cast<std::uint64_t>(b) << 48) ^ (static_cast<std::uint64_t>(h) << 32) ^ k);
}

/**
 * Full cross product algorithms x B x H x seeds in that nesting order.
 * Failed cells come back as rows with an error tag.
 */
inline std::vector<SweepRow> sweep(const SweepSpec& spec) {
    if (spec.algorithms.empty() || spec.branchings.empty() || spec.heights.empty() || spec.seeds < 1)
        throw invalid_parameter("sweep grids must be nonempty");
    struct Cell {
        std::string algorithm;
        int b, h;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const auto& algo : spec.algorithms)
        for (int b : spec.branchings)
            for (int h : spec.heights)
                for (int s = 0; s < spec.seeds; ++s) cells.push_back({algo, b, h, spec.base_seed + s});

    std::vector<SweepRow> rows(cells.size());
    parallel_for(cells.size(), spec.workers ? spec.workers : default_workers(), [&](std::size_t i) {
        const Cell& c = cells[i];
        SweepRow& row = rows[i];
        row.algorithm = c.algorithm;
        row.branching = c.b;
        row.height = c.h;
        row.optimal_count = spec.optimal_count;
        row.seed = c.seed;
        try {
            const auto tree = build_adversarial(c.b, c.h, spec.optimal_count, spec.format_fraction,
                                                cell_tree_seed(c.seed, c.b, c.h, spec.optimal_count));
            PresetOptions opts = spec.options;
            opts.seed = c.seed;
            row = leaves_to_threshold(make_preset(c.algorithm, tree, opts), tree, spec.threshold);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });
    return rows;
}

/// Type-7 (linear interpolation) sample quantile.
inline double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw invalid_parameter("quantile of empty sample");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

struct LowerBoundSummary {
    int branching = 0;
    int height = 0;
    std::uint64_t optimal_count = 0;
    std::vector<std::uint64_t> first_hits;  // 1-based query index of the first optimal leaf, per trial
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double bound = 0.0;  // B^H / (4K)
};

/**
 * Query model of the lower-bound construction: each trial draws a uniformly
 * random target set of K leaves, then queries leaves uniformly without
 * replacement until the first target is hit. first_hits counts distinct
 * leaves queried up to and including that hit.
 */
inline LowerBoundSummary lowerbound_experiment(int branching, int height, std::uint64_t optimal_count, int trials,
                                               std::uint64_t seed) {
    if (branching < 2 || height < 1) throw invalid_parameter("lower bound needs B >= 2 and H >= 1");
    if (trials < 1) throw invalid_parameter("trials must be >= 1");
    const std::uint64_t n = checked_pow(static_cast<std::uint64_t>(branching), height);
    if (optimal_count < 1 || optimal_count > n) throw invalid_parameter("K must satisfy 1 <= K <= B^H");

    LowerBoundSummary out{branching, height, optimal_count, {}, 0, 0, 0,
                          static_cast<double>(n) / (4.0 * static_cast<double>(optimal_count))};
    Rng rng(derive_seed(seed, 0x10b0));
    std::vector<std::uint64_t> order(n);
    std::vector<bool> is_target(n);
    for (int trial = 0; trial < trials; ++trial) {
        std::iota(order.begin(), order.end(), std::uint64_t{0});
        std::fill(is_target.begin(), is_target.end(), false);
        for (std::uint64_t i = 0; i < optimal_count; ++i) {
            std::swap(order[i], order[i + rng.below(n - i)]);
            is_target[order[i]] = true;
        }
        std::iota(order.begin(), order.end(), std::uint64_t{0});
        for (std::uint64_t q = 0; q < n; ++q) {
            std::swap(order[q], order[q + rng.below(n - q)]);
            if (is_target[order[q]]) {
                out.first_hits.push_back(q + 1);
                break;
            }
        }
    }
    std::vector<double> hits(out.first_hits.begin(), out.first_hits.end());
    out.q25 = quantile(hits, 0.25);
    out.median = quantile(hits, 0.5);
    out.q75 = quantile(hits, 0.75);
    return out;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw invalid_parameter("least squares needs >= 2 paired points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw invalid_parameter("least squares needs distinct x values");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

struct ScalingFit {
    LinearFit exponential;  // log(median) vs H; slope estimates log B
    LinearFit polynomial;   // log(median) vs log H; slope estimates the exponent
    std::string preferred;  // "exp-in-H" or "poly-in-H", by r^2
    std::vector<std::pair<int, double>> medians;  // (H, median leaves) used by the fit
};

/// Fits both growth models to per-H medians; at least 3 H values with positive medians are needed.
inline ScalingFit fit_heights(const std::vector<std::pair<int, double>>& medians) {
    std::vector<double> hs, log_hs, log_m;
    for (const auto& [h, m] : medians) {
        if (!(m > 0.0) || h < 1) continue;
        hs.push_back(h);
        log_hs.push_back(std::log(static_cast<double>(h)));
        log_m.push_back(std::log(m));
    }
    if (hs.size() < 3) throw invalid_parameter("scaling fit needs >= 3 distinct H values with successful rows");
    ScalingFit fit;
    fit.exponential = least_squares(hs, log_m);
    fit.polynomial = least_squares(log_hs, log_m);
    fit.preferred = fit.exponential.r2 >= fit.polynomial.r2 ? "exp-in-H" : "poly-in-H";
    fit.medians = medians;
    return fit;
}

inline ScalingFit fit_scaling(const std::vector<SweepRow>& rows, const std::string& algorithm) {
    std::map<int, std::vector<double>> by_height;
    for (const auto& r : rows)
        if (r.algorithm == algorithm && r.error.empty() && r.leaves_to_threshold)
            by_height[r.height].push_back(static_cast<double>(*r.leaves_to_threshold));
    std::vector<std::pair<int, double>> medians;
    for (auto& [h, xs] : by_height) medians.emplace_back(h, quantile(xs, 0.5));
    return fit_heights(medians);
}

}  // namespace uft
