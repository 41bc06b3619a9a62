#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qtraj {

// Base of every error raised by the library. Numerical failures and
// configuration problems are distinguished so the CLI can map them onto exit
// codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class DimensionOverflow : public Error {
public:
    using Error::Error;
};

class NonFiniteWaveform : public Error {
public:
    using Error::Error;
};

class NormalizationViolation : public Error {
public:
    NormalizationViolation(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class ZeroNorm : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class GridExhausted : public Error {
public:
    using Error::Error;
};

class JumpAtZeroIntensity : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NegativeIntensity : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class TruncationTooSmall : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Wraps an engine error with the trajectory and step where it happened.
class TrajectoryFailure : public NumericalError {
public:
    TrajectoryFailure(const std::string& what, std::size_t trajectory, std::size_t step)
        : NumericalError(what), trajectory_(trajectory), step_(step) {}
    std::size_t trajectory() const noexcept { return trajectory_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t trajectory_;
    std::size_t step_;
};

} // namespace qtraj
