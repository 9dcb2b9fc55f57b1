#pragma once

#include <stdexcept>
#include <string>

namespace hac {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform to a primitive's rule.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf was produced, or training diverged.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or precondition violation on user input.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hac
