#pragma once

#include <stdexcept>
#include <string>

namespace greyforce {

// Base of every error the library throws. The CLI maps input-side errors
// (is_input_error() == true) to exit code 2 and the rest to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool is_input_error() const noexcept { return false; }
};

class InputError : public Error {
 public:
  using Error::Error;
  bool is_input_error() const noexcept override { return true; }
};

// Missing or malformed columns in an input file.
class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

// Non-finite or otherwise invalid cell values.
class DataError : public InputError {
 public:
  DataError(const std::string& what, std::size_t row)
      : InputError(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// Non-uniform or non-increasing time grid.
class GridError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

// Index ranges, split sizes, series too short for the requested lags.
class BoundsError : public Error {
 public:
  using Error::Error;
};

// Dimension mismatch between vectors/matrices.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a formula.
class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Kernel matrix could not be factorized even at the maximum jitter.
class ConditioningError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Rank-deficient least-squares design.
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Geometry that cannot form a boundary (all points at the centre, too few points).
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

// Every optimizer run produced only non-finite costs.
class InfeasibleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace greyforce
