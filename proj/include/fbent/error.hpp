#pragma once

#include <stdexcept>
#include <string>

namespace fbent {

// Numerical failures (non-convergence, no phase match, ...) derive from
// NumericalError; bad inputs derive from ArgumentError. The CLI maps the two
// families onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Wavelength or temperature outside a model's validity range.
class RangeError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// Density matrix or state parameters that violate Hermiticity, trace or PSD.
class PhysicalityError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// Operands expressed in different bases (frequency vs polarization).
class LabelError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace fbent
