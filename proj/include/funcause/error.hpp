#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace funcause {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GridTooSmall : public Error {
public:
    using Error::Error;
};

/// Malformed dataset input. `row()` is the 1-based data row (0 = header/file level).
class SchemaError : public Error {
public:
    SchemaError(std::size_t row, const std::string& message)
        : Error("row " + std::to_string(row) + ": " + message), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class WeightError : public Error {
public:
    using Error::Error;
};

class ArmEmptyError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace funcause
