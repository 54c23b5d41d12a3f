#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "mildhjb/conjugation.hpp"
#include "mildhjb/grid.hpp"
#include "mildhjb/operator_b.hpp"

namespace mildhjb {

/// Everything the elliptic part A y = -(H*(m y))'' - f y' needs, with the
/// multiplier m = (sigma^2 + regularization) / 2.
struct EllipticOperands {
  ConjugateHamiltonian conjugate;
  DriftData drift;
  Field volatility;
  Field multiplier;
  double rho = 0.0;             // min |sigma|
  double regularization = 0.0;  // added to sigma^2 (degenerate path)
  bool with_perturbation = true;

  /// Throws ConfigError when min |sigma| == 0 and no regularization was
  /// requested, unless `allow_degenerate`.
  static EllipticOperands build(ConjugateHamiltonian conjugate,
                                DriftData drift, Field volatility,
                                double regularization = 0.0,
                                bool allow_degenerate = false);

  const Grid1D& grid() const { return volatility.grid(); }
};

struct ResolventConfig {
  double lambda = 1.0;
  /// Residual target in discrete L1; 0 selects 1e-10 * max(1, ||eta||_1).
  double tol_res = 0.0;
  int max_newton = 100;  // fallback stages use at least 50
  double damping = 1.0;
  /// Weight of the -nu y'' + nu H*(m y) regularization.
  double nu = 0.0;
  bool allow_fallback = true;
  int max_picard = 400;
};

enum class ResolventStrategy { newton, homotopy, picard };

struct ResolventDiagnostics {
  int newton_iterations = 0;
  int picard_iterations = 0;
  ResolventStrategy strategy = ResolventStrategy::newton;
  double residual = 0.0;   // certified by an independent operator apply
  double tolerance = 0.0;
  std::size_t out_of_range_nodes = 0;
};

struct ResolventResult {
  Field y;
  ResolventDiagnostics diagnostics;
};

/// A y at every node; values at the two end nodes use zero ghosts.
Field apply_A(const EllipticOperands& ops, const Field& y);

/// lambda y + A y + B y + nu(-y'' + H*(m y)) - eta at the interior nodes
/// (ends are zero), assembled from apply_A and apply_B.
Field resolvent_residual(const EllipticOperands& ops,
                         const ResolventConfig& cfg, const Field& eta,
                         const Field& y);

/// Solves lambda y + A y + B y = eta with y = 0 at both ends.
///
/// Damped Newton on the nodal system (tridiagonal Jacobian, augmented with a
/// Green-function block when B is nonlocal).  When Newton stalls, restart
/// from the nu-regularized solution and finally fall back to the proximal
/// iteration y <- (lambda + delta)-resolvent applied to eta + delta y.
/// Throws SolverError when everything runs out of budget and ConfigError
/// when lambda <= ||f'||_inf.
ResolventResult solve_resolvent(const EllipticOperands& ops,
                                const ResolventConfig& cfg, const Field& eta,
                                const Field* warm_start = nullptr);

std::string to_string(ResolventStrategy s);

}  // namespace mildhjb
