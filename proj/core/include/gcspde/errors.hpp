#pragma once

#include <stdexcept>
#include <string>

namespace gcspde {

/// Bad user-facing input: malformed files, invalid parameter values,
/// inconsistent dimensions. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: non-convergence, indefinite matrices, degenerate
/// geometry. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, int iterations, double gradient_norm)
      : NumericalError(what), iterations(iterations), gradient_norm(gradient_norm) {}
  int iterations;
  double gradient_norm;
};

class NotPositiveDefiniteError : public NumericalError {
 public:
  explicit NotPositiveDefiniteError(const std::string& what) : NumericalError(what) {}
};

}  // namespace gcspde
