#pragma once

#include <stdexcept>
#include <string>

namespace gge {

// Base class for all library errors; the CLI maps these to nonzero exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class UnsupportedTopology : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StabilityError : public Error {
public:
    using Error::Error;
};

}  // namespace gge
