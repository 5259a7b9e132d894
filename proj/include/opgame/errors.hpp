#ifndef OPGAME_ERRORS_HPP
#define OPGAME_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace opgame {

// A weight-matrix row whose off-diagonal kernel sum underflowed to zero.
class DegenerateRowError : public std::runtime_error {
public:
    DegenerateRowError(int row, const std::string& what)
        : std::runtime_error(what), row_(row) {}
    int row() const { return row_; }

private:
    int row_;
};

// Skewness/kurtosis requested on a sample where they are undefined
// (fewer than 4 points or zero variance). Callers treat this as
// "statistic unavailable", e.g. the splitter skips the cluster.
class UndefinedStatisticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what)
        : std::runtime_error(what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Non-finite values or failed linear solves inside the numerics.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The level iteration produced a non-finite rollout; carries the
// cognition level at which the trajectory blew up.
class DivergenceError : public NumericError {
public:
    DivergenceError(int level, const std::string& what)
        : NumericError(what), level_(level) {}
    int level() const { return level_; }

private:
    int level_;
};

// A reduction to fewer than 2 clusters, on which no weight matrix exists.
class DegenerateReductionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace opgame

#endif
