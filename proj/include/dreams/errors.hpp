#ifndef DREAMS_ERRORS_HPP
#define DREAMS_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dreams {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. `row()` is 1-based; 0 when the error is not tied to a row.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row = 0)
        : Error(row ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

/// Parsed successfully but violates a value invariant (NaN, Inf, label range).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Parameter out of its admissible range.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Input is valid but numerically degenerate for the requested operation.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// The optimizer produced a non-finite embedding.
class DivergenceError : public Error {
public:
    DivergenceError(std::size_t iteration)
        : Error("optimizer diverged: non-finite coordinates at iteration " + std::to_string(iteration)),
          iteration_(iteration) {}
    std::size_t iteration() const { return iteration_; }

private:
    std::size_t iteration_;
};

} // namespace dreams

#endif // DREAMS_ERRORS_HPP
