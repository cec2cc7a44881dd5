#pragma once

#include <stdexcept>
#include <string>

namespace gofslope {

// Bad input: caller-fixable, maps to CLI exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A trend-based family classification could not decide.
class Unclassified : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The requested comparison is not settled by any available result.
class OpenProblem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical procedure failed at runtime (exit code 3 in the CLI).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gofslope
