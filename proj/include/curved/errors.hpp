#pragma once

#include <stdexcept>
#include <string>

namespace curved {

/// Invalid inputs, shapes, or configuration. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Vector/matrix dimensions do not match what an operation requires.
class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A class or element index outside its valid range.
class OutOfRangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Use of a stateful object before it has accumulated any data.
class NotInitializedError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& file, long line, const std::string& what)
        : ValidationError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : ValidationError(what), line_(0) {}

    long line() const { return line_; }

private:
    long line_;
};

/// Numerical failure at runtime (non-finite loss or gradient). Maps to CLI exit code 2.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace curved
