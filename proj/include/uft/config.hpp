#pragma once

#include "error.hpp"
#include "trainer.hpp"
#include "tree.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace uft {

/**
 * Fully resolved experiment description.
 *
 * Text form is one `key = value` per line with optional `[section]` headers;
 * `#` starts a comment. A key may appear at top level or inside its own section.
 */
struct ExperimentConfig {
    std::string command;  // set by the caller: run | sweep | lowerbound
    TreeSpec tree;

    std::string preset = "uft-theory";
    std::optional<double> eta;
    std::optional<double> beta;
    std::optional<std::uint64_t> selection_samples;
    int steps = 500;
    int t_hint = 300;
    double p_low = 0.05;
    double p_high = 0.95;
    int stage_count = 4;
    std::uint64_t leaf_budget = 0;
    bool allow_unsafe_beta = false;

    std::uint64_t seed = 0;
    int seeds = 1;
    std::string output = "./out/";
    double threshold = 0.5;
    int snapshot_every = 0;

    std::vector<std::string> algorithms{"rft", "uft-theory"};
    std::vector<int> b_values{2};
    std::vector<int> h_values{2, 3, 4, 5, 6};
    int trials = 200;

    /// Keys written in the source text; tree-dependent values resolved from defaults are not listed.
    std::set<std::string> explicit_keys;

    bool is_explicit(const std::string& key) const { return explicit_keys.count(key) > 0; }

    /// Preset knobs; tree-dependent values are passed only when explicit unless `resolved` is set.
    PresetOptions preset_options(bool resolved) const {
        PresetOptions o;
        o.steps = steps;
        o.t_hint = t_hint;
        o.p_low = p_low;
        o.p_high = p_high;
        o.stage_count = stage_count;
        o.leaf_budget = leaf_budget;
        o.seed = seed;
        o.allow_unsafe_beta = allow_unsafe_beta;
        if (resolved || is_explicit("eta")) o.eta = eta;
        if (resolved || is_explicit("beta")) o.beta = beta;
        if (resolved || is_explicit("N")) o.selection_samples = selection_samples;
        return o;
    }
};

namespace detail {

inline const std::map<std::string, std::string>& key_sections() {
    static const std::map<std::string, std::string> m{
        {"flavor", "tree"},       {"B", "tree"},           {"H", "tree"},
        {"K", "tree"},            {"format_fraction", "tree"}, {"tree_seed", "tree"},
        {"numbers", "tree"},      {"target", "tree"},      {"preset", "algorithm"},
        {"eta", "algorithm"},     {"beta", "algorithm"},   {"T", "algorithm"},
        {"T_hint", "algorithm"},  {"p_low", "algorithm"},  {"p_high", "algorithm"},
        {"N", "algorithm"},       {"stage_count", "algorithm"}, {"leaf_budget", "algorithm"},
        {"allow_unsafe_beta", "algorithm"}, {"seed", "run"}, {"seeds", "run"},
        {"output", "run"},        {"threshold", "run"},    {"snapshot_every", "run"},
        {"algorithms", "sweep"},  {"B_values", "sweep"},   {"H_values", "sweep"},
        {"trials", "lowerbound"},
    };
    return m;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::istringstream is(v);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& v, int line, const std::string& key) {
    std::istringstream is(v);
    T x{};
    if constexpr (std::is_unsigned_v<T>) {
        if (!v.empty() && v[0] == '-') throw parse_error(line, "type mismatch for '" + key + "': expected a nonnegative integer");
    }
    is >> x;
    std::string rest;
    if (is.fail() || (is >> rest)) throw parse_error(line, "type mismatch for '" + key + "': '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& v, int line, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw parse_error(line, "type mismatch for '" + key + "': expected a boolean");
}

}  // namespace detail

/**
 * Parses and resolves a config. Unknown keys, malformed values and violated
 * constraints raise parse_error naming the offending line. Tree-dependent
 * algorithm defaults (eta, beta, N) are filled from the configured tree.
 */
inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::map<std::string, int> line_of;
    std::istringstream is(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        std::string s = raw;
        if (const auto hash = s.find('#'); hash != std::string::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw parse_error(line, "malformed section header");
            section = detail::trim(s.substr(1, s.size() - 2));
            static const std::set<std::string> known{"tree", "algorithm", "run", "sweep", "lowerbound"};
            if (!known.count(section)) throw parse_error(line, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw parse_error(line, "expected 'key = value'");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string v = detail::trim(s.substr(eq + 1));
        const auto it = detail::key_sections().find(key);
        if (it == detail::key_sections().end()) throw parse_error(line, "unknown key '" + key + "'");
        if (!section.empty() && it->second != section)
            throw parse_error(line, "key '" + key + "' does not belong to section [" + section + "]");
        if (v.empty()) throw parse_error(line, "missing value for '" + key + "'");
        line_of[key] = line;
        cfg.explicit_keys.insert(key);

        using detail::parse_number;
        if (key == "flavor") cfg.tree.flavor = v;
        else if (key == "B") cfg.tree.branching = parse_number<int>(v, line, key);
        else if (key == "H") cfg.tree.height = parse_number<int>(v, line, key);
        else if (key == "K") cfg.tree.optimal_count = parse_number<std::uint64_t>(v, line, key);
        else if (key == "format_fraction") cfg.tree.format_fraction = parse_number<double>(v, line, key);
        else if (key == "tree_seed") cfg.tree.seed = parse_number<std::uint64_t>(v, line, key);
        else if (key == "numbers") {
            cfg.tree.numbers.clear();
            for (const auto& n : detail::split_list(v)) cfg.tree.numbers.push_back(parse_number<long long>(n, line, key));
        } else if (key == "target") cfg.tree.target = parse_number<long long>(v, line, key);
        else if (key == "preset") cfg.preset = v;
        else if (key == "eta") cfg.eta = parse_number<double>(v, line, key);
        else if (key == "beta") cfg.beta = parse_number<double>(v, line, key);
        else if (key == "T") cfg.steps = parse_number<int>(v, line, key);
        else if (key == "T_hint") cfg.t_hint = parse_number<int>(v, line, key);
        else if (key == "p_low") cfg.p_low = parse_number<double>(v, line, key);
        else if (key == "p_high") cfg.p_high = parse_number<double>(v, line, key);
        else if (key == "N") cfg.selection_samples = parse_number<std::uint64_t>(v, line, key);
        else if (key == "stage_count") cfg.stage_count = parse_number<int>(v, line, key);
        else if (key == "leaf_budget") cfg.leaf_budget = parse_number<std::uint64_t>(v, line, key);
        else if (key == "allow_unsafe_beta") cfg.allow_unsafe_beta = detail::parse_bool(v, line, key);
        else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(v, line, key);
        else if (key == "seeds") cfg.seeds = parse_number<int>(v, line, key);
        else if (key == "output") cfg.output = v;
        else if (key == "threshold") cfg.threshold = parse_number<double>(v, line, key);
        else if (key == "snapshot_every") cfg.snapshot_every = parse_number<int>(v, line, key);
        else if (key == "algorithms") cfg.algorithms = detail::split_list(v);
        else if (key == "B_values") {
            cfg.b_values.clear();
            for (const auto& x : detail::split_list(v)) cfg.b_values.push_back(parse_number<int>(x, line, key));
        } else if (key == "H_values") {
            cfg.h_values.clear();
            for (const auto& x : detail::split_list(v)) cfg.h_values.push_back(parse_number<int>(x, line, key));
        } else if (key == "trials") cfg.trials = parse_number<int>(v, line, key);
    }

    auto at = [&](std::initializer_list<const char*> keys) {
        int l = 0;
        for (const char* k : keys)
            if (auto f = line_of.find(k); f != line_of.end()) l = std::max(l, f->second);
        return l;
    };
    auto require = [&](bool ok, std::initializer_list<const char*> keys, const std::string& msg) {
        if (!ok) throw parse_error(at(keys), msg);
    };
    const auto& presets = preset_names();
    require(std::find(presets.begin(), presets.end(), cfg.preset) != presets.end(), {"preset"},
            "unknown preset '" + cfg.preset + "'");
    for (const auto& a : cfg.algorithms)
        require(std::find(presets.begin(), presets.end(), a) != presets.end(), {"algorithms"},
                "unknown algorithm '" + a + "'");
    require(cfg.tree.flavor == "adversarial" || cfg.tree.flavor == "countdown", {"flavor"},
            "flavor must be adversarial or countdown");
    require(cfg.p_low >= 0.0 && cfg.p_high <= 1.0, {"p_low", "p_high"}, "p_low and p_high must lie in [0, 1]");
    require(cfg.p_low <= cfg.p_high, {"p_low", "p_high"}, "p_low \xe2\x89\xa4 p_high violated");
    require(cfg.steps >= 0, {"T"}, "T must be >= 0");
    require(cfg.t_hint >= 1, {"T_hint"}, "T_hint must be >= 1");
    require(cfg.stage_count >= 1, {"stage_count"}, "stage_count must be >= 1");
    require(!cfg.eta || *cfg.eta > 0.0, {"eta"}, "eta must be > 0");
    require(!cfg.beta || *cfg.beta >= 0.0, {"beta"}, "beta must be >= 0");
    require(cfg.tree.format_fraction >= 0.0 && cfg.tree.format_fraction <= 1.0, {"format_fraction"},
            "format_fraction must lie in [0, 1]");
    require(cfg.seeds >= 1, {"seeds"}, "seeds must be >= 1");
    require(cfg.threshold > 0.0 && cfg.threshold < 1.0, {"threshold"}, "threshold must lie in (0, 1)");
    require(cfg.trials >= 1, {"trials"}, "trials must be >= 1");
    require(cfg.snapshot_every >= 0, {"snapshot_every"}, "snapshot_every must be >= 0");
    require(!cfg.algorithms.empty() && !cfg.b_values.empty() && !cfg.h_values.empty(),
            {"algorithms", "B_values", "H_values"}, "sweep grids must be nonempty");
    for (int b : cfg.b_values) require(b >= 2, {"B_values"}, "B_values entries must be >= 2");
    for (int h : cfg.h_values) require(h >= 1, {"H_values"}, "H_values entries must be >= 1");

    try {
        const SearchTree tree = build_from_spec(cfg.tree);
        cfg.tree = tree.spec();
        const TrainConfig resolved = make_preset(cfg.preset, tree, cfg.preset_options(false));
        cfg.eta = resolved.eta;
        cfg.beta = resolved.beta;
        cfg.selection_samples = resolved.selection_samples;
    } catch (const invalid_parameter& e) {
        throw parse_error(at({"flavor", "B", "H", "K", "numbers", "target", "format_fraction", "preset", "beta", "eta",
                              "T", "N"}),
                          std::string("constraint violation: ") + e.what());
    }
    return cfg;
}

/// Tree and training configuration of a single-run config.
inline SearchTree config_tree(const ExperimentConfig& cfg) { return build_from_spec(cfg.tree); }

inline TrainConfig config_train(const ExperimentConfig& cfg, const SearchTree& tree) {
    return make_preset(cfg.preset, tree, cfg.preset_options(true));
}

namespace detail {
/// Shortest text that parses back to the same double.
inline std::string format_value(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}
template <typename T>
std::string join(const std::vector<T>& xs) {
    std::ostringstream os;
    for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
    return os.str();
}
}  // namespace detail

/**
 * Config text that reproduces this configuration. With `resolved` the
 * tree-dependent eta/beta/N are written out; otherwise only explicit ones are.
 */
inline std::string config_text(const ExperimentConfig& cfg, bool resolved) {
    using detail::format_value;
    std::ostringstream os;
    os << "[tree]\n";
    os << "flavor = " << cfg.tree.flavor << '\n';
    if (cfg.tree.flavor == "countdown") {
        os << "numbers = " << detail::join(cfg.tree.numbers) << '\n';
        os << "target = " << cfg.tree.target << '\n';
    } else {
        os << "B = " << cfg.tree.branching << '\n';
        os << "H = " << cfg.tree.height << '\n';
        os << "K = " << cfg.tree.optimal_count << '\n';
        os << "format_fraction = " << format_value(cfg.tree.format_fraction) << '\n';
        os << "tree_seed = " << cfg.tree.seed << '\n';
    }
    os << "[algorithm]\n";
    os << "preset = " << cfg.preset << '\n';
    if (cfg.eta && (resolved || cfg.is_explicit("eta"))) os << "eta = " << format_value(*cfg.eta) << '\n';
    if (cfg.beta && (resolved || cfg.is_explicit("beta"))) os << "beta = " << format_value(*cfg.beta) << '\n';
    if (cfg.selection_samples && (resolved || cfg.is_explicit("N"))) os << "N = " << *cfg.selection_samples << '\n';
    os << "T = " << cfg.steps << '\n';
    os << "T_hint = " << cfg.t_hint << '\n';
    os << "p_low = " << format_value(cfg.p_low) << '\n';
    os << "p_high = " << format_value(cfg.p_high) << '\n';
    os << "stage_count = " << cfg.stage_count << '\n';
    os << "leaf_budget = " << cfg.leaf_budget << '\n';
    os << "allow_unsafe_beta = " << (cfg.allow_unsafe_beta ? "true" : "false") << '\n';
    os << "[run]\n";
    os << "seed = " << cfg.seed << '\n';
    os << "seeds = " << cfg.seeds << '\n';
    os << "output = " << cfg.output << '\n';
    os << "threshold = " << format_value(cfg.threshold) << '\n';
    os << "snapshot_every = " << cfg.snapshot_every << '\n';
    os << "[sweep]\n";
    os << "algorithms = " << detail::join(cfg.algorithms) << '\n';
    os << "B_values = " << detail::join(cfg.b_values) << '\n';
    os << "H_values = " << detail::join(cfg.h_values) << '\n';
    os << "[lowerbound]\n";
    os << "trials = " << cfg.trials << '\n';
    return os.str();
}

}  // namespace uft
