#include "mildhjb/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "mildhjb/error.hpp"

namespace mildhjb {

TransformedProblem TransformedProblem::build(
    const ProblemSpec& spec, const Grid1D& grid,
    const ConjugateHamiltonian& conjugate, double regularization,
    bool allow_degenerate) {
  if (!(spec.horizon > 0.0)) throw ConfigError("horizon T must be positive");
  DriftData drift(grid, spec.drift);
  Field sigma = Field::from_function(grid, spec.volatility.value);
  EllipticOperands ops = EllipticOperands::build(
      conjugate, std::move(drift), std::move(sigma), regularization,
      allow_degenerate);
  Field y0 = Field::from_function(
      grid, [&](double x) { return -spec.terminal.d2(x); });
  Field g1 = Field::from_function(
      grid, [&](double x) { return -spec.running.d2(x); });
  const std::size_t last = grid.size() - 1;
  y0[0] = y0[last] = 0.0;
  g1[0] = g1[last] = 0.0;
  for (double v : y0.values()) {
    if (!std::isfinite(v)) throw ConfigError("-g0'' is not finite on the grid");
  }
  for (double v : g1.values()) {
    if (!std::isfinite(v)) throw ConfigError("-g'' is not finite on the grid");
  }
  return {std::move(ops), std::move(y0), std::move(g1), spec.horizon};
}

double max_admissible_step(const TransformedProblem& problem) {
  const double l0 = problem.operands.drift.lambda0();
  if (l0 == 0.0) return std::numeric_limits<double>::infinity();
  return 0.5 / l0;
}

ResolventResult step(const TransformedProblem& problem, double eps,
                     const Field& y_prev, const MildOptions& options) {
  const double emax = max_admissible_step(problem);
  if (!(eps > 0.0) || !(eps < emax)) {
    throw ConfigError("time step " + std::to_string(eps) +
                      " not admissible; need 0 < eps < " +
                      std::to_string(emax) + " (1 / (2 ||f'||_inf))");
  }
  ResolventConfig cfg = options.resolvent;
  cfg.lambda = 1.0 / eps;
  Field eta = problem.source;
  for (std::size_t k = 0; k < eta.size(); ++k) eta[k] += y_prev[k] / eps;
  return solve_resolvent(problem.operands, cfg, eta, &y_prev);
}

std::pair<double, double> energy_terms(const EllipticOperands& ops,
                                       const Field& y) {
  const std::size_t n = y.size();
  const double h = y.grid().spacing();
  double e = 0.0, d = 0.0;
  double w_prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double z = ops.multiplier[k] * y[k];
    // 2m = sigma^2 (+ regularization), which keeps the degenerate path finite.
    if (ops.multiplier[k] > 0.0) {
      e += ops.conjugate.potential(z) / (2.0 * ops.multiplier[k]);
    }
    const double w = ops.conjugate.value(z);
    if (k > 0) {
      const double g = (w - w_prev) / h;
      d += g * g;
    }
    w_prev = w;
  }
  return {e * h, d * h};
}

MildSolution mild_solve(const TransformedProblem& problem, double eps,
                        const MildOptions& options) {
  const double T = problem.horizon;
  if (!(eps > 0.0)) throw ConfigError("time step must be positive");
  auto n_steps = static_cast<std::size_t>(std::floor(T / eps));
  while (n_steps > 0 && static_cast<double>(n_steps) * eps > T) --n_steps;
  while (static_cast<double>(n_steps + 1) * eps <= T) ++n_steps;
  if (n_steps > 0 && !(eps < max_admissible_step(problem))) {
    throw ConfigError("time step " + std::to_string(eps) +
                      " not admissible; need eps < " +
                      std::to_string(max_admissible_step(problem)) +
                      " (1 / (2 ||f'||_inf))");
  }

  MildSolution sol{problem.grid()};
  sol.eps = eps;
  sol.horizon = T;
  sol.steps = n_steps;
  const double rest = T - static_cast<double>(n_steps) * eps;
  sol.partial_step = n_steps > 0 && rest > eps / 100.0;
  sol.partial_dt = sol.partial_step ? rest : 0.0;
  const std::size_t total = n_steps + (sol.partial_step ? 1 : 0);
  const std::size_t budget = std::max<std::size_t>(options.snapshot_budget, 2);
  sol.stride = (total + 1 > budget) ? (total + budget - 1) / (budget - 1) : 1;

  Field y = problem.initial;
  auto record_state = [&](const Field& state, double dt) {
    const auto [e, d] = energy_terms(problem.operands, state);
    sol.energy.push_back(e);
    sol.dissipation.push_back(d);
    sol.dts.push_back(dt);
  };
  sol.times.push_back(0.0);
  sol.snapshots.push_back(y);
  record_state(y, 0.0);

  for (std::size_t i = 1; i <= total; ++i) {
    const double dt = i <= n_steps ? eps : sol.partial_dt;
    std::optional<ResolventResult> r;
    try {
      r.emplace(step(problem, dt, y, options));
    } catch (const SolverError& e) {
      throw SolverError("step " + std::to_string(i) + ": " + e.what(),
                        e.residual());
    }
    y = std::move(r->y);
    sol.records.push_back({i, dt, r->diagnostics});
    record_state(y, dt);
    if (i % sol.stride == 0 || i == total) {
      sol.times.push_back(i <= n_steps ? static_cast<double>(i) * eps : T);
      sol.snapshots.push_back(y);
    }
  }
  return sol;
}

const Field& MildSolution::at(double t) const {
  const double slack = 1e-12 * std::max(1.0, horizon);
  auto it = std::upper_bound(times.begin(), times.end(), t + slack);
  const auto idx = static_cast<std::size_t>(
      std::max<std::ptrdiff_t>(0, (it - times.begin()) - 1));
  return snapshots[idx];
}

double sup_l1_gap(const MildSolution& a, const MildSolution& b) {
  if (!(a.grid == b.grid)) {
    throw ConfigError("sup_l1_gap needs solutions on the same grid");
  }
  std::vector<double> ts = a.times;
  ts.insert(ts.end(), b.times.begin(), b.times.end());
  std::sort(ts.begin(), ts.end());
  double gap = 0.0;
  for (double t : ts) gap = std::max(gap, l1_distance(a.at(t), b.at(t)));
  return gap;
}

Refinement refine_until(const TransformedProblem& problem, double tol,
                        double eps0, std::size_t max_halvings,
                        const MildOptions& options) {
  if (!(tol > 0.0)) throw ConfigError("refinement tolerance must be positive");
  Refinement out{mild_solve(problem, eps0, options)};
  out.eps_series.push_back(eps0);
  double eps = eps0;
  for (std::size_t k = 0; k < max_halvings; ++k) {
    eps *= 0.5;
    MildSolution next = mild_solve(problem, eps, options);
    out.gaps.push_back(sup_l1_gap(out.finest, next));
    out.eps_series.push_back(eps);
    out.finest = std::move(next);
    if (out.gaps.back() <= tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

EnergyReport energy_report(const MildSolution& sol) {
  EnergyReport rep;
  if (!sol.energy.empty()) rep.max_energy = sol.energy.front();
  for (std::size_t i = 0; i < sol.energy.size(); ++i) {
    rep.max_energy = std::max(rep.max_energy, sol.energy[i]);
    if (i > 0) rep.cumulative_dissipation += sol.dts[i] * sol.dissipation[i];
  }
  rep.implied_constant = 2.0 * rep.max_energy + rep.cumulative_dissipation;
  rep.finite = std::isfinite(rep.max_energy) &&
               std::isfinite(rep.cumulative_dissipation);
  return rep;
}

}  // namespace mildhjb
