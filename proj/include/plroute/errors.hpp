#pragma once

#include <stdexcept>
#include <string>

namespace plroute {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: violated invariant, out-of-range value, malformed request.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Messages carry a line number or byte offset.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Operation called on an object that is not ready for it (e.g. unfitted scaler).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Non-finite intermediate values.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Raised by the sampler: non-finite start point or too many divergences.
class SamplerError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace plroute
