#pragma once

#include <stdexcept>
#include <string>

namespace uft {

/// Raised when an operation receives arguments outside its contract.
class invalid_parameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised by KL-divergence when the support condition q > 0 wherever p > 0 fails.
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised by config parsing; carries the 1-based line number (0 when not tied to a line).
class parse_error : public std::runtime_error {
public:
    parse_error(int line, const std::string& what)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace uft
