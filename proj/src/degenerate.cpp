#include "mildhjb/degenerate.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>

#include "mildhjb/error.hpp"

namespace mildhjb {

VolatilityDerivatives VolatilityDerivatives::tabulate(
    const Grid1D& grid, const ScalarFunction& sigma) {
  return {Field::from_function(grid, sigma.d1),
          Field::from_function(grid, sigma.d2)};
}

LinfBoundReport check_linf_bound(const EllipticOperands& ops,
                                 const VolatilityDerivatives& dsigma,
                                 const Field& y, const Field& eta,
                                 double lambda) {
  LinfBoundReport rep;
  rep.max_abs_y = y.linf_norm();
  if (!(lambda > ops.drift.lambda0())) return rep;

  const Field& s = ops.volatility;
  double k1 = 0.0, k2 = 0.0, m_max = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    k1 = std::max(k1, std::abs(s[k] * dsigma.d1[k]));
    k2 = std::max(k2, std::abs(s[k] * dsigma.d2[k] + dsigma.d1[k] * dsigma.d1[k]));
    m_max = std::max(m_max, ops.multiplier[k]);
  }
  const double s2 = ops.conjugate.derivative_lipschitz();
  const double d0 = std::abs(ops.conjugate.derivative(0.0));
  const double a = s2 * (k1 * k1 + m_max * k2);
  const double b = lambda - d0 * k2;
  const double c = eta.linf_norm();
  if (!(b > 0.0)) return rep;
  double m = 0.0;
  if (a == 0.0) {
    m = c / b;
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return rep;
    m = 2.0 * c / (b + std::sqrt(disc));
  }
  rep.applicable = true;
  rep.bound = m;
  rep.slack = m - rep.max_abs_y;
  // Round-off allowance relative to the data scale.
  const double allowance = 1e-9 * std::max(1.0, m);
  rep.holds = true;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (std::abs(y[k]) > m + allowance) {
      rep.holds = false;
      rep.offending_node = k;
      break;
    }
  }
  return rep;
}

namespace {

DegenerateLevel run_level(const ProblemSpec& spec, const Grid1D& grid,
                          const ConjugateHamiltonian& conj, double reg,
                          double eps, const MildOptions& options) {
  const TransformedProblem problem =
      TransformedProblem::build(spec, grid, conj, reg, true);
  MildOptions opts = options;
  opts.snapshot_budget = std::numeric_limits<std::size_t>::max();
  DegenerateLevel level{reg, mild_solve(problem, eps, opts)};
  const MildSolution& sol = level.solution;
  const auto dsigma = VolatilityDerivatives::tabulate(grid, spec.volatility);
  for (std::size_t i = 1; i < sol.snapshots.size(); ++i) {
    const double dt = sol.dts[i];
    const Field& prev = sol.snapshots[i - 1];
    const Field& cur = sol.snapshots[i];
    // B y is moved to the right-hand side so the bound is the one for the
    // unperturbed resolvent.
    Field eta = problem.source;
    const Field by = apply_B(problem.operands.drift, cur);
    for (std::size_t k = 0; k < eta.size(); ++k) {
      eta[k] += prev[k] / dt - by[k];
    }
    const LinfBoundReport rep =
        check_linf_bound(problem.operands, dsigma, cur, eta, 1.0 / dt);
    ++level.bound_checks;
    level.max_bound = std::max(level.max_bound, rep.bound);
    level.max_abs_y = std::max(level.max_abs_y, rep.max_abs_y);
    if (!rep.applicable || !rep.holds) level.bounds_hold = false;
  }
  return level;
}

}  // namespace

DegenerateSweep solve_degenerate(const ProblemSpec& spec, const Grid1D& grid,
                                 const ConjugateHamiltonian& conj,
                                 const std::vector<double>& ladder,
                                 double eps, const MildOptions& options) {
  if (ladder.empty()) throw ConfigError("regularization ladder is empty");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0.0) || (i > 0 && !(ladder[i] < ladder[i - 1]))) {
      throw ConfigError("regularization ladder must be positive and strictly "
                        "decreasing");
    }
  }
  std::vector<std::future<DegenerateLevel>> jobs;
  for (double reg : ladder) {
    jobs.push_back(std::async(std::launch::async, run_level, std::cref(spec),
                              std::cref(grid), std::cref(conj), reg, eps,
                              std::cref(options)));
  }
  DegenerateSweep sweep;
  for (auto& j : jobs) sweep.levels.push_back(j.get());
  for (std::size_t i = 0; i < sweep.levels.size(); ++i) {
    DegenerateLevel& lv = sweep.levels[i];
    if (i > 0) {
      lv.gap_to_previous =
          sup_l1_gap(sweep.levels[i - 1].solution, lv.solution);
      if (i > 1 && !(lv.gap_to_previous < sweep.levels[i - 1].gap_to_previous)) {
        sweep.gaps_decreasing = false;
      }
    }
    sweep.bounds_hold = sweep.bounds_hold && lv.bounds_hold;
  }
  return sweep;
}

void write_degenerate_csv(std::ostream& os, const DegenerateSweep& sweep) {
  os << "# units: eps_reg [volatility^2], gap [L1 of y], M [y], max_abs_y [y]\n";
  os << "eps_reg,gap_to_previous,M,max_abs_y\n";
  os << std::setprecision(17);
  for (const auto& lv : sweep.levels) {
    os << lv.regularization << ',' << lv.gap_to_previous << ','
       << lv.max_bound << ',' << lv.max_abs_y << '\n';
  }
}

}  // namespace mildhjb
