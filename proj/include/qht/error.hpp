#pragma once

#include <stdexcept>
#include <string>

namespace qht {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A requested order or dimension exceeds what the routine supports.
/// `required()` carries the smallest value that would have worked, or -1
/// when no such value exists.
class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, long required = -1)
      : Error(what), required_(required) {}
  long required() const noexcept { return required_; }

 private:
  long required_;
};

/// Internal consistency check failed, or a solver could not converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The rejection sampler's envelope is unusable for the given state.
class EnvelopeError : public NumericError {
 public:
  using NumericError::NumericError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qht
