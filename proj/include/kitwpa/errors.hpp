#pragma once

#include <stdexcept>
#include <string>

namespace kitwpa {

// Base for every error raised by the library. Each subclass maps onto one
// failure mode named by an operation's contract.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Frequency at a pole of an open-stub admittance.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Bloch phase jumped by more than pi between adjacent grid points.
class GridTooCoarseError : public Error {
public:
    using Error::Error;
};

/// Bias current outside the range of the effective nonlinearity model.
class OutOfModelError : public Error {
public:
    using Error::Error;
};

class ModeInGapError : public Error {
public:
    ModeInGapError(const std::string& tone, double frequency_hz)
        : Error("tone '" + tone + "' at " + std::to_string(frequency_hz) +
                " Hz lies inside a stop band"),
          tone_(tone), frequency_hz_(frequency_hz) {}

    [[nodiscard]] const std::string& tone() const { return tone_; }
    [[nodiscard]] double frequency_hz() const { return frequency_hz_; }

private:
    std::string tone_;
    double frequency_hz_;
};

class StiffnessError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Y factor at or below one.
class InversionError : public Error {
public:
    using Error::Error;
};

/// Y factor above the physical bound set by the loads.
class InconsistentInputsError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

class AmbiguityError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input file content does not match its documented schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

class MissingInputError : public Error {
public:
    using Error::Error;
};

}  // namespace kitwpa
