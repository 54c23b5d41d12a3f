#pragma once

#include <functional>
#include <string>

#include "mildhjb/conjugation.hpp"

namespace mildhjb {

/// A smooth coefficient together with its first two derivatives.
struct ScalarFunction {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::string label;

  double operator()(double x) const { return value(x); }

  static ScalarFunction constant(double c);
};

/// The control problem: minimize E[ int_0^T g(X) + h(u) dt + g0(X_T) ]
/// subject to dX = f(X) dt + sqrt(u) sigma(X) dW, u >= 0.
struct ProblemSpec {
  ScalarFunction drift;       // f
  ScalarFunction volatility;  // sigma
  ScalarFunction running;     // g
  ScalarFunction terminal;    // g0
  RunningCost cost = RunningCost::quadratic(1.0, 0.0);
  double horizon = 1.0;
};

}  // namespace mildhjb
