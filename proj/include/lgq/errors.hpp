#pragma once

#include <stdexcept>
#include <string>

namespace lgq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument, shape mismatch, or malformed input file.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A steady-state integration did not reach its residual threshold.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual, double time)
        : Error(what), residual_(residual), time_(time) {}

    double residual() const noexcept { return residual_; }
    double time() const noexcept { return time_; }

private:
    double residual_;
    double time_;
};

/// A matrix that must be inverted is singular or ill-conditioned.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, std::string matrix, double condition)
        : Error(what), matrix_(std::move(matrix)), condition_(condition) {}

    const std::string& matrix() const noexcept { return matrix_; }
    double condition() const noexcept { return condition_; }

private:
    std::string matrix_;
    double condition_;
};

/// Non-finite values appeared during integration.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace lgq
