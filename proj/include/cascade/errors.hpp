#pragma once

#include <stdexcept>
#include <string>

namespace cascade {

/// Bad user input: unknown model, malformed flag, mismatched dimensions.
/// The CLI maps this to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientDataError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidGridError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct DegenerateGridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RankDeficiencyError : std::runtime_error {
    RankDeficiencyError(const std::string& what, long numerical_rank)
        : std::runtime_error(what), rank(numerical_rank) {}
    long rank;
};

struct InvalidModelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidStartError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File-level parse failure; line is 1-based, 0 when unknown.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, long line_number)
        : std::runtime_error(what), line(line_number) {}
    long line;
};

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cascade
