#pragma once

#include <stdexcept>
#include <string>

namespace divdelay {

/// Input outside the mathematical domain of an operation (x < boundary, nu > 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A quadrature or series did not reach the requested tolerance within its budget.
class AccuracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid problem / solver / simulation parameters. `field` names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Numerical breakdown inside the solver: no root in bracket, degenerate slope,
/// overflow of the working domain, every grid point failing.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace divdelay
