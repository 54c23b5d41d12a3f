#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mildhjb/problem.hpp"
#include "mildhjb/stepper.hpp"

namespace mildhjb {

/// sigma' and sigma'' tabulated alongside the operands.
struct VolatilityDerivatives {
  Field d1;
  Field d2;
  static VolatilityDerivatives tabulate(const Grid1D& grid,
                                        const ScalarFunction& sigma);
};

/// Outcome of the comparison bound -M <= y <= M for one resolvent solve
/// lambda y + A y = eta.
struct LinfBoundReport {
  bool applicable = false;  // false when no M satisfies the bound inequality
  double bound = 0.0;       // M
  double max_abs_y = 0.0;
  double slack = 0.0;       // M - max |y|
  bool holds = false;
  std::optional<std::size_t> offending_node;
};

/// M is the smallest positive root of
///   ||eta||_inf - (lambda - |(H*)'(0)| K2) M
///     + ||(H*)''||_inf (K1^2 + m_max K2) M^2 = 0,
/// with K1 = ||sigma sigma'||_inf and K2 = ||sigma sigma'' + sigma'^2||_inf,
/// i.e. the constant M beats every term of (H*(m M))''.  Requires
/// lambda > ||f'||_inf.
LinfBoundReport check_linf_bound(const EllipticOperands& ops,
                                 const VolatilityDerivatives& dsigma,
                                 const Field& y, const Field& eta,
                                 double lambda);

struct DegenerateLevel {
  double regularization = 0.0;
  MildSolution solution;
  double gap_to_previous = 0.0;  // 0 for the first level
  double max_bound = 0.0;        // largest M over the steps
  double max_abs_y = 0.0;
  bool bounds_hold = true;
  std::size_t bound_checks = 0;
};

struct DegenerateSweep {
  std::vector<DegenerateLevel> levels;
  bool gaps_decreasing = true;
  bool bounds_hold = true;
};

inline const std::vector<double> kDefaultLadder{1e-1, 1e-2, 1e-3, 1e-4};

/// Runs the stepper with m = (sigma^2 + eps_reg)/2 for every level of a
/// strictly decreasing ladder (levels run concurrently), then measures the
/// sup-in-time L1 gaps between adjacent levels and checks the L-infinity
/// bound after every step.
DegenerateSweep solve_degenerate(const ProblemSpec& spec, const Grid1D& grid,
                                 const ConjugateHamiltonian& conj,
                                 const std::vector<double>& ladder,
                                 double eps, const MildOptions& options = {});

/// CSV: eps_reg, gap_to_previous, M, max_abs_y.
void write_degenerate_csv(std::ostream& os, const DegenerateSweep& sweep);

}  // namespace mildhjb
