#pragma once

#include <stdexcept>
#include <string>

namespace fracvar {

/// Argument outside the mathematical domain of a function (maps to CLI exit code 3).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Wrong number or shape of arguments: vector lengths, grid mismatch, arity.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input text. Carries a 1-based line (0 if not line oriented) and column.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line, int column)
        : std::runtime_error(what), line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace fracvar
