#pragma once

#include <stdexcept>
#include <string>

namespace vbm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, malformed input or a violated precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A computation failed: step-size underflow, region exit, a residual or
/// cross-check disagreement. Always signals a numerical or internal problem.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace vbm
