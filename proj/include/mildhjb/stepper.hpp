#pragma once

#include <cstddef>
#include <vector>

#include "mildhjb/grid.hpp"
#include "mildhjb/problem.hpp"
#include "mildhjb/resolvent.hpp"

namespace mildhjb {

/// dy/dt + A y + B y = g1, y(0) = y0 on the truncated grid, with
/// y0 = -g0'' and g1 = -g''.
struct TransformedProblem {
  EllipticOperands operands;
  Field initial;  // y0
  Field source;   // g1
  double horizon = 0.0;

  const Grid1D& grid() const { return initial.grid(); }

  /// Tabulates a ProblemSpec.  The end nodes of y0 and g1 are zeroed
  /// (Dirichlet truncation).
  static TransformedProblem build(const ProblemSpec& spec, const Grid1D& grid,
                                  const ConjugateHamiltonian& conjugate,
                                  double regularization = 0.0,
                                  bool allow_degenerate = false);
};

struct StepRecord {
  std::size_t index;  // step number i (producing y^i), 1-based
  double dt;
  ResolventDiagnostics resolvent;
};

struct MildOptions {
  ResolventConfig resolvent;   // lambda is overwritten per step
  std::size_t snapshot_budget = 200000;
};

/// Piecewise-constant implicit Euler interpolant y_eps(t) = y^i on
/// [t_i, t_{i+1}).
struct MildSolution {
  Grid1D grid;
  double eps = 0.0;
  double horizon = 0.0;
  std::size_t steps = 0;        // N = floor(T / eps)
  bool partial_step = false;    // a shortened final step of T - N eps taken
  double partial_dt = 0.0;
  std::size_t stride = 1;       // snapshot storage stride

  std::vector<double> times{};    // ascending, times[0] = 0
  std::vector<Field> snapshots{};
  std::vector<StepRecord> records{};

  // Per state i = 0..(N or N+1): E^i = h sum j(m y^i)/sigma^2 and
  // D^i = h sum ((H*(m y^i))_x)^2; dts[i] is the step that produced y^i.
  std::vector<double> energy{};
  std::vector<double> dissipation{};
  std::vector<double> dts{};

  /// Snapshot active at time t (largest stored t_i <= t).
  const Field& at(double t) const;
  const Field& final_state() const { return snapshots.back(); }
};

/// One implicit step: solve_resolvent with lambda = 1/eps and
/// eta = g1 + y_prev / eps.  Requires eps ||f'||_inf < 1/2.
ResolventResult step(const TransformedProblem& problem, double eps,
                     const Field& y_prev, const MildOptions& options = {});

/// Largest admissible time step for the problem (inf when f' = 0).
double max_admissible_step(const TransformedProblem& problem);

MildSolution mild_solve(const TransformedProblem& problem, double eps,
                        const MildOptions& options = {});

/// sup over t of ||a(t) - b(t)||_1 for the piecewise-constant interpolants.
double sup_l1_gap(const MildSolution& a, const MildSolution& b);

struct Refinement {
  MildSolution finest;
  std::vector<double> eps_series{};
  std::vector<double> gaps{};  // gaps[i] between eps_series[i] and [i+1]
  bool converged = false;
};

/// Halves eps from eps0 until the sup-in-time gap between successive
/// solutions is <= tol or `max_halvings` is reached (converged = false).
Refinement refine_until(const TransformedProblem& problem, double tol,
                        double eps0, std::size_t max_halvings = 6,
                        const MildOptions& options = {});

struct EnergyReport {
  double max_energy = 0.0;            // max_i E^i
  double cumulative_dissipation = 0.0;  // sum_i dt_i D^i, i >= 1
  double implied_constant = 0.0;      // 2 max E + cumulative dissipation
  bool finite = true;
};

EnergyReport energy_report(const MildSolution& sol);

/// E = h sum j(m y)/sigma^2 and D = h sum ((H*(m y))_x)^2 for one state.
std::pair<double, double> energy_terms(const EllipticOperands& ops,
                                       const Field& y);

}  // namespace mildhjb
