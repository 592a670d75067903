#pragma once

#include <stdexcept>
#include <string>

namespace ringlab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (r <= 0, s <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Coincident source/target with no regularization.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature ran out of its subdivision budget.
class NonConvergenceError : public Error {
public:
    using Error::Error;
};

/// A filtered reduction (barycenter, diameter, ...) selected no particles.
class EmptySelectionError : public Error {
public:
    using Error::Error;
};

/// A particle stage position reached r <= r_min.
class AxisCrossingError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent configuration / input file.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A run aborted; carries the simulation time at which it failed.
class RunError : public Error {
public:
    RunError(const std::string& what, double time)
        : Error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

}  // namespace ringlab
