#pragma once

#include <stdexcept>
#include <string>

namespace cantus {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: violated precondition, malformed file, inconsistent shapes.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced during computation, or training divergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cantus
