#pragma once

#include "error.hpp"
#include "harness.hpp"
#include "trainer.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace uft {

inline constexpr const char* kRunColumns = "t,hint_len,pass1_exact,v_tilde,leaves_total,leaves_distinct,objective";
inline constexpr const char* kSweepColumns = "algo,B,H,K,seed,leaves_to_50,final_pass1";
inline constexpr const char* kLowerBoundColumns = "B,H,K,trials,q25,median,q75,bound";

/// 9 significant digits; "nan" for NaN.
inline std::string fmt9(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

/**
 * Header comment block. Lines "# <config line>" reproduce the configuration;
 * lines "#@ ..." are informational and ignored by extract_config_echo.
 */
inline void write_echo(std::ostream& os, const std::string& command, const std::string& config_text,
                       const std::vector<std::string>& info = {}) {
    os << "#@ uft " << command << '\n';
    std::istringstream is(config_text);
    std::string line;
    while (std::getline(is, line)) os << "# " << line << '\n';
    for (const auto& i : info) os << "#@ " << i << '\n';
}

/// Recovers the config text from a CSV's leading comment block.
inline std::string extract_config_echo(const std::string& csv) {
    std::istringstream is(csv);
    std::string line, out;
    while (std::getline(is, line)) {
        if (line.rfind('#', 0) != 0) break;
        if (line.rfind("#@", 0) == 0) continue;
        out += line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1) + '\n';
    }
    return out;
}

inline void write_run_rows(std::ostream& os, const RunMetrics& m) {
    os << kRunColumns << '\n';
    for (const auto& r : m.steps)
        os << r.t << ',' << r.hint_length << ',' << fmt9(r.pass1_exact) << ',' << fmt9(r.v_tilde) << ','
           << r.leaves_total << ',' << r.leaves_distinct << ',' << fmt9(r.objective) << '\n';
}

inline std::string sanitize_field(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

inline void write_sweep_rows(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << kSweepColumns << '\n';
    for (const auto& r : rows) {
        os << r.algorithm << ',' << r.branching << ',' << r.height << ',' << r.optimal_count << ',' << r.seed << ',';
        if (!r.error.empty())
            os << "error(" << sanitize_field(r.error) << "),nan\n";
        else
            os << (r.leaves_to_threshold ? std::to_string(*r.leaves_to_threshold) : std::string("not reached")) << ','
               << fmt9(r.final_pass1) << '\n';
    }
}

inline void write_lowerbound_rows(std::ostream& os, const std::vector<LowerBoundSummary>& rows) {
    os << kLowerBoundColumns << '\n';
    for (const auto& r : rows)
        os << r.branching << ',' << r.height << ',' << r.optimal_count << ',' << r.first_hits.size() << ','
           << fmt9(r.q25) << ',' << fmt9(r.median) << ',' << fmt9(r.q75) << ',' << fmt9(r.bound) << '\n';
}

/// Parses a sweep CSV (comment lines skipped) back into rows.
inline std::vector<SweepRow> read_sweep_rows(std::istream& is) {
    std::vector<SweepRow> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != kSweepColumns) throw invalid_parameter("sweep CSV: unexpected header '" + line + "'");
            header_seen = true;
            continue;
        }
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 7) throw invalid_parameter("sweep CSV: expected 7 fields in '" + line + "'");
        SweepRow r;
        r.algorithm = f[0];
        r.branching = std::stoi(f[1]);
        r.height = std::stoi(f[2]);
        r.optimal_count = std::stoull(f[3]);
        r.seed = std::stoull(f[4]);
        if (f[5].rfind("error(", 0) == 0)
            r.error = f[5].substr(6, f[5].size() - 7);
        else if (f[5] != "not reached")
            r.leaves_to_threshold = std::stoull(f[5]);
        r.final_pass1 = f[6] == "nan" ? std::nan("") : std::stod(f[6]);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace uft
