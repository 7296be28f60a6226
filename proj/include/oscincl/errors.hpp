#pragma once

#include <stdexcept>
#include <string>

namespace oscincl {

// Exit-code categories of the command line tool map onto these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition or theorem hypothesis is violated by the inputs.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration (unknown key, wrong type, bad model name).
class ConfigError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// The numerics could not deliver (NaN energy, stalled descent, missing amplitude).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace oscincl
