#pragma once

#include <stdexcept>
#include <string>

namespace supctrl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A state or parameter lies outside the admissible domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The model is valid but outside what the library supports (e.g. a
/// non-natural upper boundary).
class UnsupportedModelError : public Error {
public:
    using Error::Error;
};

/// A structural condition on the problem (payoff regularity, sign or
/// monotonicity requirements) failed numerical verification.
class AssumptionViolation : public Error {
public:
    AssumptionViolation(std::string condition, const std::string& detail)
        : Error(condition + ": " + detail), condition_(std::move(condition)) {}

    const std::string& condition() const noexcept { return condition_; }

private:
    std::string condition_;
};

/// A Green-kernel integral diverges; `side` is "lower" or "upper".
class IntegrabilityError : public Error {
public:
    IntegrabilityError(std::string side, const std::string& detail)
        : Error("integrability (" + side + " tail): " + detail), side_(std::move(side)) {}

    const std::string& side() const noexcept { return side_; }

private:
    std::string side_;
};

/// Quadrature, root bracketing or ODE integration did not converge.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or expression text.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace supctrl
