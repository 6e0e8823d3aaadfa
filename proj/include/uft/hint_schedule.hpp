#pragma once

#include "error.hpp"
#include "rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>

namespace uft {

namespace schedule {

/// Cosine-annealed proportion with l ~ Binomial(L, p).
struct CosineBinomial {
    double p_low = 0.05;
    double p_high = 0.95;
    int t_hint = 300;
};

/// Cosine-annealed proportion with l on the two integers around p * L.
struct CosineTwoPoint {
    double p_low = 0.05;
    double p_high = 0.95;
    int t_hint = 300;
};

/// l uniform on {0, ..., L} at every step.
struct Uniform {};

/// Equal-duration stages over t_hint, lengths decreasing linearly from L, then 0.
struct Staged {
    int stage_count = 4;
    int t_hint = 300;
};

/// Always 0: plain reinforcement fine-tuning.
struct Zero {};

/// Always L: the supervised limit.
struct Full {};

}  // namespace schedule

using HintSchedule = std::variant<schedule::CosineBinomial, schedule::CosineTwoPoint, schedule::Uniform,
                                  schedule::Staged, schedule::Zero, schedule::Full>;

/// p(t) = p_low + (p_high - p_low)(1 + cos(pi (t+1)/T_hint)) / 2, defined for 0 <= t < T_hint.
inline double cosine_fraction(int t, int t_hint, double p_low, double p_high) {
    if (t < 0 || t >= t_hint) throw invalid_parameter("cosine_fraction requires 0 <= t < T_hint");
    if (!(0.0 <= p_low && p_low <= p_high && p_high <= 1.0))
        throw invalid_parameter("cosine_fraction requires 0 <= p_low <= p_high <= 1");
    const double phase = static_cast<double>(t + 1) / static_cast<double>(t_hint) * std::numbers::pi;
    return p_low + 0.5 * (p_high - p_low) * (1.0 + std::cos(phase));
}

/// Binomial(L, p) as the number of heads in L independent coin flips.
inline int sample_binomial(int trials, double p, Rng& rng) {
    int heads = 0;
    for (int i = 0; i < trials; ++i) heads += rng.uniform() < p ? 1 : 0;
    return heads;
}

/// l = n with probability n + 1 - m and n + 1 otherwise, where m = p * L and n = floor(m).
inline int sample_two_point(int length, double p, Rng& rng) {
    const double m = p * static_cast<double>(length);
    const double n = std::floor(m);
    const int base = static_cast<int>(n);
    if (base >= length) return length;
    return rng.uniform() < (n + 1.0 - m) ? base : base + 1;
}

/// Expected fraction p(t) a schedule targets at step t, where one is defined.
inline double schedule_fraction(const HintSchedule& s, int t) {
    return std::visit(
        [t](const auto& v) -> double {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, schedule::CosineBinomial> || std::is_same_v<V, schedule::CosineTwoPoint>)
                return t < v.t_hint ? cosine_fraction(t, v.t_hint, v.p_low, v.p_high) : 0.0;
            else if constexpr (std::is_same_v<V, schedule::Staged>) {
                if (t >= v.t_hint) return 0.0;
                const long stage = static_cast<long>(t) * v.stage_count / v.t_hint;
                return 1.0 - static_cast<double>(stage) / v.stage_count;
            } else if constexpr (std::is_same_v<V, schedule::Uniform>)
                return 0.5;
            else if constexpr (std::is_same_v<V, schedule::Zero>)
                return 0.0;
            else
                return 1.0;
        },
        s);
}

/// Draws a hint length in {0, ..., L} for step t.
inline int sample_length(const HintSchedule& s, int t, int length, Rng& rng) {
    if (length < 0) throw invalid_parameter("hint length bound L must be >= 0");
    return std::visit(
        [&](const auto& v) -> int {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, schedule::CosineBinomial>) {
                if (t >= v.t_hint) return 0;
                return sample_binomial(length, cosine_fraction(t, v.t_hint, v.p_low, v.p_high), rng);
            } else if constexpr (std::is_same_v<V, schedule::CosineTwoPoint>) {
                if (t >= v.t_hint) return 0;
                return sample_two_point(length, cosine_fraction(t, v.t_hint, v.p_low, v.p_high), rng);
            } else if constexpr (std::is_same_v<V, schedule::Uniform>) {
                return static_cast<int>(rng.below(static_cast<std::uint64_t>(length) + 1));
            } else if constexpr (std::is_same_v<V, schedule::Staged>) {
                if (t >= v.t_hint) return 0;
                return static_cast<int>(std::lround(length * schedule_fraction(s, t)));
            } else if constexpr (std::is_same_v<V, schedule::Zero>) {
                return 0;
            } else {
                return length;
            }
        },
        s);
}

/// Short tag echoed into output rows, e.g. "cosine-binomial(0.05,0.95,300)".
inline std::string schedule_tag(const HintSchedule& s) {
    return std::visit(
        [](const auto& v) -> std::string {
            using V = std::decay_t<decltype(v)>;
            std::ostringstream os;
            if constexpr (std::is_same_v<V, schedule::CosineBinomial>)
                os << "cosine-binomial(" << v.p_low << ',' << v.p_high << ',' << v.t_hint << ')';
            else if constexpr (std::is_same_v<V, schedule::CosineTwoPoint>)
                os << "cosine-two-point(" << v.p_low << ',' << v.p_high << ',' << v.t_hint << ')';
            else if constexpr (std::is_same_v<V, schedule::Uniform>)
                os << "uniform";
            else if constexpr (std::is_same_v<V, schedule::Staged>)
                os << "staged(" << v.stage_count << ',' << v.t_hint << ')';
            else if constexpr (std::is_same_v<V, schedule::Zero>)
                os << "zero";
            else
                os << "full";
            return os.str();
        },
        s);
}

}  // namespace uft
