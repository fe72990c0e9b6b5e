#pragma once

#include <stdexcept>
#include <string>

namespace taskimp {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or configuration (exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed, misaligned or missing input data (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

// Divergence, non-finite values, solver failure (exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace taskimp
