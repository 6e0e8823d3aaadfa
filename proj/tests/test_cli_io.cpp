#include "uft/config.hpp"
#include "uft/csv.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace uft;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

int line_count(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

int run_cli(const std::string& args) {
    const int status = std::system((std::string(UFT_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("uft_cli_" + std::to_string(::getpid()) + "_" +
                                           ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    fs::path dir;
};

}  // namespace

TEST(ParseConfig, DefaultsForRft) {
    const auto cfg = parse_config("preset = rft\n");
    EXPECT_EQ(cfg.steps, 500);
    EXPECT_EQ(cfg.t_hint, 300);
    EXPECT_DOUBLE_EQ(cfg.p_low, 0.05);
    EXPECT_DOUBLE_EQ(cfg.p_high, 0.95);
    EXPECT_EQ(cfg.output, "./out/");
    const auto tree = config_tree(cfg);
    EXPECT_TRUE(std::holds_alternative<schedule::Zero>(config_train(cfg, tree).schedule));
    EXPECT_EQ(parse_config("").preset, "uft-theory");
}

TEST(ParseConfig, ProbabilityOrderViolation) {
    try {
        parse_config("preset = uft-practical\np_low = 0.5\np_high = 0.1\n");
        FAIL() << "expected parse_error";
    } catch (const parse_error& e) {
        EXPECT_NE(std::string(e.what()).find("p_low \xe2\x89\xa4 p_high violated"), std::string::npos);
        EXPECT_EQ(e.line(), 3);
    }
}

TEST(ParseConfig, TheoryBetaAutoFilled) {
    const auto cfg = parse_config("preset = uft-theory\nB = 2\nH = 4\n");
    ASSERT_TRUE(cfg.beta);
    EXPECT_NEAR(*cfg.beta, 0.004328, 1e-6);
    EXPECT_EQ(*cfg.selection_samples, 788u);
    EXPECT_NEAR(*cfg.eta, 1.0 / std::sqrt(500.0), 1e-15);
}

TEST(ParseConfig, ErrorsNameTheLine) {
    auto line_of = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const parse_error& e) {
            return e.line();
        }
        return -1;
    };
    EXPECT_EQ(line_of("B = 2\nfoo = 1\n"), 2);
    EXPECT_EQ(line_of("# comment\nH = four\n"), 2);
    EXPECT_EQ(line_of("[nonsense]\n"), 1);
    EXPECT_EQ(line_of("[tree]\nB = 2\npreset = rft\n"), 3);
    EXPECT_EQ(line_of("B = 2\nH = 3\nK = 9\n"), 3);
    EXPECT_EQ(line_of("preset = uft-theory\nbeta = 0.5\n"), 2);
    EXPECT_EQ(line_of("preset = uft-theory\nbeta = 0.5\nallow_unsafe_beta = true\n"), -1);
    EXPECT_EQ(line_of("just words\n"), 1);
    EXPECT_EQ(line_of("T = 5 6\n"), 1);
    EXPECT_EQ(line_of("preset = magic\n"), 1);
    EXPECT_EQ(line_of("threshold = 1.0\n"), 1);
}

TEST(ParseConfig, SectionsListsAndCountdown) {
    const auto cfg = parse_config(
        "[tree]\nflavor = countdown\nnumbers = 3, 5, 7, 13\ntarget = 24\n"
        "[algorithm]\npreset = staged\nstage_count = 3\n[sweep]\nalgorithms = rft, r3\nH_values = 2,3\n");
    EXPECT_EQ(cfg.tree.numbers, (std::vector<long long>{3, 5, 7, 13}));
    EXPECT_EQ(cfg.algorithms, (std::vector<std::string>{"rft", "r3"}));
    EXPECT_EQ(cfg.h_values, (std::vector<int>{2, 3}));
    EXPECT_EQ(config_tree(cfg).branching(), 48);
}

TEST(ConfigText, RoundTrip) {
    const auto cfg = parse_config("preset = uft-practical\nB = 3\nH = 3\nK = 2\neta = 0.2\nT = 77\nseed = 9\n");
    const std::string text = config_text(cfg, true);
    const auto again = parse_config(text);
    EXPECT_EQ(config_text(again, true), text);
    EXPECT_EQ(*again.eta, 0.2);
    EXPECT_EQ(again.steps, 77);
}

TEST(Csv, EmptyMetricsIsHeaderOnly) {
    std::ostringstream os;
    write_run_rows(os, RunMetrics{});
    EXPECT_EQ(os.str(), std::string(kRunColumns) + "\n");
}

TEST(Csv, OneStepIsTwoLines) {
    RunMetrics m;
    m.steps.push_back({0, 2, 0.123456789012, NAN, 7, 5, -0.5, 7});
    std::ostringstream os;
    write_run_rows(os, m);
    EXPECT_EQ(line_count(os.str()), 2);
    EXPECT_NE(os.str().find("0,2,0.123456789,nan,7,5,-0.5\n"), std::string::npos);
}

TEST(Csv, SweepRoundTripReproducesFits) {
    std::vector<SweepRow> rows;
    for (int h = 2; h <= 6; ++h)
        for (std::uint64_t s = 0; s < 3; ++s)
            rows.push_back({"rft", 2, h, 1, s, std::uint64_t(3 * (1 << h) + 7 * s + h), 0.5 + 0.01 * h, ""});
    rows.push_back({"rft", 2, 6, 1, 9, std::nullopt, 0.25, ""});
    rows.push_back({"rft", 2, 6, 1, 10, std::nullopt, NAN, "bad, thing"});
    std::stringstream ss;
    write_echo(ss, "sweep", "B = 2\n");
    write_sweep_rows(ss, rows);
    EXPECT_NE(ss.str().find("not reached"), std::string::npos);
    EXPECT_NE(ss.str().find("error(bad; thing),nan"), std::string::npos);
    const auto back = read_sweep_rows(ss);
    ASSERT_EQ(back.size(), rows.size());
    const auto a = fit_scaling(rows, "rft"), b = fit_scaling(back, "rft");
    EXPECT_EQ(a.exponential.slope, b.exponential.slope);
    EXPECT_EQ(a.exponential.r2, b.exponential.r2);
    EXPECT_EQ(a.polynomial.slope, b.polynomial.slope);
    EXPECT_EQ(a.medians, b.medians);
}

TEST(Csv, EchoExtraction) {
    std::ostringstream os;
    write_echo(os, "run", "[tree]\nB = 3\n", {"note"});
    os << kRunColumns << '\n';
    EXPECT_EQ(extract_config_echo(os.str()), "[tree]\nB = 3\n");
    EXPECT_EQ(os.str().rfind("#@ uft run\n", 0), 0u);
}

TEST(Csv, LowerBoundRows) {
    std::ostringstream os;
    write_lowerbound_rows(os, {lowerbound_experiment(2, 3, 1, 10, 0)});
    EXPECT_EQ(line_count(os.str()), 2);
    EXPECT_EQ(os.str().rfind(kLowerBoundColumns, 0), 0u);
}

TEST_F(CliTest, RunEchoRerunIsIdentical) {
    write_file(dir / "run.cfg", "preset = uft-practical\nB = 2\nH = 3\nT = 40\nT_hint = 20\nsnapshot_every = 10\noutput = " +
                                    (dir / "a").string() + "\n");
    ASSERT_EQ(run_cli("run " + (dir / "run.cfg").string() + " --seed 5"), 0);
    const fs::path first = dir / "a" / "run_uft-practical_seed5.csv";
    ASSERT_TRUE(fs::exists(first));
    EXPECT_TRUE(fs::exists(dir / "a" / "run_uft-practical_seed5_t40.policy"));
    EXPECT_TRUE(fs::exists(dir / "a" / "run_uft-practical_seed5_final.policy"));
    const std::string csv = read_file(first);
    EXPECT_EQ(line_count(csv.substr(csv.find(kRunColumns))), 41);

    // Rerun from the echoed config in a copy; output path is part of the echo.
    write_file(dir / "copy.csv", csv);
    fs::remove(first);
    ASSERT_EQ(run_cli("run " + (dir / "copy.csv").string()), 0);
    EXPECT_EQ(read_file(first), csv);
}

TEST_F(CliTest, SweepAndLowerbound) {
    write_file(dir / "s.cfg", "T = 60\nseeds = 2\nalgorithms = rft, uft-practical\nH_values = 2, 3\nT_hint = 30\n"
                              "trials = 20\noutput = " + (dir / "o").string() + "\n");
    ASSERT_EQ(run_cli("sweep " + (dir / "s.cfg").string()), 0);
    const std::string sweep_csv = read_file(dir / "o" / "sweep.csv");
    EXPECT_EQ(line_count(sweep_csv.substr(sweep_csv.find(kSweepColumns))), 1 + 2 * 2 * 2);
    ASSERT_EQ(run_cli("lowerbound " + (dir / "s.cfg").string()), 0);
    const std::string lb = read_file(dir / "o" / "lowerbound.csv");
    EXPECT_EQ(line_count(lb.substr(lb.find(kLowerBoundColumns))), 3);
}

TEST_F(CliTest, ExitCodes) {
    write_file(dir / "bad.cfg", "p_low = 0.9\np_high = 0.1\n");
    EXPECT_EQ(run_cli("run " + (dir / "bad.cfg").string()), 2);
    EXPECT_EQ(run_cli("run " + (dir / "missing.cfg").string()), 2);
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("verify"), 0);
    write_file(dir / "blocked", "");
    write_file(dir / "io.cfg", "T = 3\npreset = rft\noutput = " + (dir / "blocked" / "sub").string() + "\n");
    EXPECT_EQ(run_cli("run " + (dir / "io.cfg").string()), 1);
}
