#pragma once

#include <stdexcept>
#include <string>

namespace mildhjb {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input data or configuration (bad grid, lambda too small, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The supplied running cost is not convex / coercive on the probe grid.
class ConvexityError : public Error {
 public:
  using Error::Error;
};

/// An iterative solve ran out of budget.  Carries the last residual seen.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mildhjb
