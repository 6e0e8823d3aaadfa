// Command-line front end: run / sweep / lowerbound / verify.

#include "uft/config.hpp"
#include "uft/csv.hpp"
#include "uft/harness.hpp"
#include "uft/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read config '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// Loads a config file, or the echoed config at the top of a CSV written by this tool.
uft::ExperimentConfig load_config(const std::string& path, const std::string& command,
                                  const std::optional<std::uint64_t>& seed) {
    std::string text = slurp(path);
    if (text.rfind("#@ uft ", 0) == 0) text = uft::extract_config_echo(text);
    if (seed) text += "\n[run]\nseed = " + std::to_string(*seed) + "\n";
    auto cfg = uft::parse_config(text);
    cfg.command = command;
    return cfg;
}

std::ofstream open_output(const fs::path& path) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string fixed(double x, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, x);
    return buf;
}

int cmd_run(const uft::ExperimentConfig& base) {
    const auto tree = uft::config_tree(base);
    std::printf("%-8s %6s %6s %10s %12s %12s %9s\n", "seed", "steps", "t_sel", "pass1", "leaves", "distinct", "wall_s");
    for (int k = 0; k < base.seeds; ++k) {
        uft::ExperimentConfig cfg = base;
        cfg.seed = base.seed + k;
        cfg.seeds = 1;
        const auto train_cfg = uft::config_train(cfg, tree);
        const fs::path dir(cfg.output);
        const std::string stem = "run_" + cfg.preset + "_seed" + std::to_string(cfg.seed);

        uft::StepObserver observer;
        if (cfg.snapshot_every > 0)
            observer = [&](const uft::StepRecord& rec, const uft::Policy& pol) {
                if ((rec.t + 1) % cfg.snapshot_every != 0) return;
                const fs::path p = dir / (stem + "_t" + std::to_string(rec.t + 1) + ".policy");
                auto out = open_output(p);
                uft::write_policy(out, pol);
                finish(out, p);
            };
        const auto result = uft::train(train_cfg, tree, observer);
        const auto& m = result.metrics;

        const fs::path csv = dir / (stem + ".csv");
        auto out = open_output(csv);
        uft::write_echo(out, "run", uft::config_text(cfg, true),
                        {"tree " + tree.spec().to_record(), "schedule " + uft::schedule_tag(train_cfg.schedule),
                         "selected_t " + std::to_string(m.selected_t), "final_pass1 " + uft::fmt9(m.final_pass1)});
        uft::write_run_rows(out, m);
        finish(out, csv);

        const fs::path pol = dir / (stem + "_final.policy");
        auto pout = open_output(pol);
        uft::write_policy(pout, result.policy);
        finish(pout, pol);

        std::printf("%-8llu %6zu %6d %10s %12llu %12llu %9s\n", static_cast<unsigned long long>(cfg.seed),
                    m.steps.size(), m.selected_t, fixed(m.final_pass1).c_str(),
                    static_cast<unsigned long long>(m.leaves_total), static_cast<unsigned long long>(m.leaves_distinct),
                    fixed(m.wall_seconds, 2).c_str());
    }
    return kExitOk;
}

void print_fit(const std::string& label, const uft::ScalingFit& f) {
    std::printf("fit %-20s exp-in-H slope %8s r2 %6s | poly-in-H slope %8s r2 %6s | preferred %s\n", label.c_str(),
                fixed(f.exponential.slope).c_str(), fixed(f.exponential.r2).c_str(), fixed(f.polynomial.slope).c_str(),
                fixed(f.polynomial.r2).c_str(), f.preferred.c_str());
}

int cmd_sweep(const uft::ExperimentConfig& cfg) {
    uft::SweepSpec spec;
    spec.algorithms = cfg.algorithms;
    spec.branchings = cfg.b_values;
    spec.heights = cfg.h_values;
    spec.optimal_count = cfg.tree.optimal_count;
    spec.seeds = cfg.seeds;
    spec.base_seed = cfg.seed;
    spec.format_fraction = cfg.tree.format_fraction;
    spec.threshold = cfg.threshold;
    spec.options = cfg.preset_options(false);
    const auto rows = uft::sweep(spec);

    const fs::path csv = fs::path(cfg.output) / "sweep.csv";
    auto out = open_output(csv);
    uft::write_echo(out, "sweep", uft::config_text(cfg, false));
    uft::write_sweep_rows(out, rows);
    finish(out, csv);

    std::printf("%-14s %3s %3s %8s %14s %10s %7s\n", "algo", "B", "H", "reached", "median_leaves", "med_pass1", "errors");
    int errors = 0;
    for (const auto& algo : cfg.algorithms)
        for (int b : cfg.b_values)
            for (int h : cfg.h_values) {
                std::vector<double> leaves, pass;
                int err = 0, n = 0;
                for (const auto& r : rows) {
                    if (r.algorithm != algo || r.branching != b || r.height != h) continue;
                    ++n;
                    if (!r.error.empty()) {
                        ++err;
                        continue;
                    }
                    pass.push_back(r.final_pass1);
                    if (r.leaves_to_threshold) leaves.push_back(static_cast<double>(*r.leaves_to_threshold));
                }
                errors += err;
                const std::string med = leaves.empty() ? "not reached" : fixed(uft::quantile(leaves, 0.5), 1);
                const std::string mp = pass.empty() ? "nan" : fixed(uft::quantile(pass, 0.5));
                std::printf("%-14s %3d %3d %4zu/%-3d %14s %10s %7d\n", algo.c_str(), b, h, leaves.size(), n, med.c_str(),
                            mp.c_str(), err);
            }
    for (const auto& algo : cfg.algorithms)
        for (int b : cfg.b_values) {
            std::vector<uft::SweepRow> subset;
            for (const auto& r : rows)
                if (r.branching == b) subset.push_back(r);
            const std::string label = algo + " B=" + std::to_string(b);
            try {
                print_fit(label, uft::fit_scaling(subset, algo));
            } catch (const uft::invalid_parameter& e) {
                std::printf("fit %-20s unavailable: %s\n", label.c_str(), e.what());
            }
        }
    std::printf("wrote %s\n", csv.string().c_str());
    return errors ? kExitFailure : kExitOk;
}

int cmd_lowerbound(const uft::ExperimentConfig& cfg) {
    std::vector<uft::LowerBoundSummary> rows;
    for (int b : cfg.b_values)
        for (int h : cfg.h_values)
            rows.push_back(uft::lowerbound_experiment(b, h, cfg.tree.optimal_count, cfg.trials, cfg.seed));

    const fs::path csv = fs::path(cfg.output) / "lowerbound.csv";
    auto out = open_output(csv);
    uft::write_echo(out, "lowerbound", uft::config_text(cfg, false));
    uft::write_lowerbound_rows(out, rows);
    finish(out, csv);

    std::printf("%3s %3s %6s %7s %10s %10s %10s %10s\n", "B", "H", "K", "trials", "q25", "median", "q75", "B^H/4K");
    for (const auto& r : rows)
        std::printf("%3d %3d %6llu %7zu %10s %10s %10s %10s\n", r.branching, r.height,
                    static_cast<unsigned long long>(r.optimal_count), r.first_hits.size(), fixed(r.q25, 2).c_str(),
                    fixed(r.median, 2).c_str(), fixed(r.q75, 2).c_str(), fixed(r.bound, 2).c_str());
    for (int b : cfg.b_values) {
        std::vector<std::pair<int, double>> medians;
        for (const auto& r : rows)
            if (r.branching == b) medians.emplace_back(r.height, r.median);
        const std::string label = "B=" + std::to_string(b);
        try {
            print_fit(label, uft::fit_heights(medians));
        } catch (const uft::invalid_parameter& e) {
            std::printf("fit %-20s unavailable: %s\n", label.c_str(), e.what());
        }
    }
    std::printf("wrote %s\n", csv.string().c_str());
    return kExitOk;
}

int cmd_verify(bool full) {
    const auto results = uft::run_properties(full ? uft::VerifyLevel::full : uft::VerifyLevel::fast, &std::cout);
    int failed = 0;
    const uft::PropertyResult* first = nullptr;
    for (const auto& r : results)
        if (!r.passed) {
            ++failed;
            if (!first) first = &r;
        }
    std::cout << results.size() - failed << '/' << results.size() << " properties passed\n";
    if (first) {
        std::cout << "first counterexample [" << first->module << "] " << first->name << ": " << first->counterexample
                  << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hint-started fine-tuning simulator on synthetic search trees"};
    app.require_subcommand(1);
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "Override the config seed");

    std::string config_path;
    auto* run = app.add_subcommand("run", "Train one preset on one tree; writes per-step CSV and policies");
    run->add_option("config", config_path, "Config file, or a CSV written by this tool")->required();
    auto* sw = app.add_subcommand("sweep", "Leaves-to-threshold over algorithms x B x H x seeds");
    sw->add_option("config", config_path, "Config file")->required();
    auto* lb = app.add_subcommand("lowerbound", "First-hit statistics of uniform leaf querying");
    lb->add_option("config", config_path, "Config file")->required();
    bool full = false;
    auto* ver = app.add_subcommand("verify", "Run the property suites");
    ver->add_flag("--full", full, "Include the slower lemma checks");
    for (auto* sub : {run, sw, lb}) sub->add_option("--seed", seed, "Override the config seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        std::cout << std::unitbuf;
        if (ver->parsed()) return cmd_verify(full);
        const std::string command = run->parsed() ? "run" : sw->parsed() ? "sweep" : "lowerbound";
        const auto cfg = load_config(config_path, command, seed);
        if (command == "run") return cmd_run(cfg);
        if (command == "sweep") return cmd_sweep(cfg);
        return cmd_lowerbound(cfg);
    } catch (const UsageError& e) {
        std::cerr << "uft: " << e.what() << '\n';
        return kExitUsage;
    } catch (const uft::parse_error& e) {
        std::cerr << "uft: config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "uft: " << e.what() << '\n';
        return kExitFailure;
    }
}
