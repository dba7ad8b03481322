#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace mpfield {

// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller-supplied value is out of range or malformed.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// A request would exceed a configured size or memory limit.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Base for failures of a numerical routine on otherwise valid input.
class NumericalError : public Error {
public:
    using Error::Error;
};

// An internal consistency check failed (fit verification, residuals, ...).
class IntegrityError : public NumericalError {
public:
    explicit IntegrityError(const std::string& what, std::optional<int> bandwidth = std::nullopt)
        : NumericalError(what), bandwidth_(bandwidth) {}

    // Offending bandwidth M when the failure came from a lattice-count fit.
    std::optional<int> bandwidth() const noexcept { return bandwidth_; }

private:
    std::optional<int> bandwidth_;
};

// An iterative scheme ran out of budget before meeting its tolerance.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double previous, double last)
        : NumericalError(what), previous_(previous), last_(last) {}

    double previous_estimate() const noexcept { return previous_; }
    double last_estimate() const noexcept { return last_; }

private:
    double previous_;
    double last_;
};

// A closed form was evaluated outside the region where it is real-valued.
class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace mpfield
