#pragma once

#include <stdexcept>
#include <string>

namespace bmgcn {

// Base of all library errors. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid run configuration or command-line arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (files, indices, labels, splits).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or degenerate intermediate quantities during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace bmgcn
