#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mildhjb/conjugation.hpp"
#include "mildhjb/resolvent.hpp"
#include "mildhjb/stepper.hpp"

namespace mildhjb {

/// Value function phi(t, .) = Phi(y(T - t)) on ascending times, with
/// phi_xx = -y taken directly from the transformed state.
struct ValueFunction {
  Grid1D grid;
  double horizon = 0.0;
  std::vector<double> times{};
  std::vector<Field> phi{};
  std::vector<Field> phi_x{};
  std::vector<Field> phi_xx{};
};

/// Tabulated feedback u*(t_i, x_k) >= 0, time-major.
struct FeedbackPolicy {
  Grid1D grid;
  std::vector<double> times{};
  std::vector<std::vector<double>> table{};

  double horizon() const { return times.back(); }
};

ValueFunction reconstruct_value(const MildSolution& sol);

/// u*(t, x) = (H*)'(sigma(x)^2 / 2 * (-phi_xx(t, x))).
FeedbackPolicy synthesize_feedback(const ValueFunction& v,
                                   const EllipticOperands& ops,
                                   const ConjugateHamiltonian& conj);

/// Bilinear in (t, x); constant outside the spatial domain, t clamped to
/// [0, T].
double interpolate_policy(const FeedbackPolicy& p, double t, double x);

/// Fraction of the domain kept when the value function is reported
/// (the truncation offset dominates near the ends).
inline constexpr double kInnerFraction = 0.8;
bool in_inner_domain(const Grid1D& grid, double x);

/// Dense CSV export: columns t, x, u.
void write_policy_csv(std::ostream& os, const FeedbackPolicy& p);

/// Compact text format:
///   mildhjb-policy 1
///   grid <half_width> <nodes>
///   times <count>
///   <t> <u_0> ... <u_{n-1}>      (one line per time)
void write_policy_text(std::ostream& os, const FeedbackPolicy& p);
FeedbackPolicy read_policy_text(std::istream& is);

}  // namespace mildhjb
