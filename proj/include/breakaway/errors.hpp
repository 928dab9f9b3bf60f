#pragma once

#include <stdexcept>
#include <string>

namespace breakaway {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A strategy that cannot be executed within the energy budget or power limits.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Root finder called on an interval without a sign change.
class BracketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative kernel exhausted its iteration budget before meeting tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adaptive step size fell below the representable limit (try the implicit mode).
class StiffnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rider or peloton velocity dropped to zero before reaching the finish.
class StallError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace breakaway
