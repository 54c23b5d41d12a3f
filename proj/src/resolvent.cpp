#include "mildhjb/resolvent.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <vector>

#include "mildhjb/error.hpp"

namespace mildhjb {

EllipticOperands EllipticOperands::build(ConjugateHamiltonian conjugate,
                                         DriftData drift, Field volatility,
                                         double regularization,
                                         bool allow_degenerate) {
  if (!(volatility.grid() == drift.grid())) {
    throw ConfigError("volatility and drift tables live on different grids");
  }
  if (regularization < 0.0) {
    throw ConfigError("volatility regularization must be nonnegative");
  }
  double rho = std::numeric_limits<double>::infinity();
  Field m(volatility.grid());
  for (std::size_t k = 0; k < volatility.size(); ++k) {
    const double s = volatility[k];
    if (!std::isfinite(s)) throw ConfigError("volatility table is not finite");
    rho = std::min(rho, std::abs(s));
    m[k] = 0.5 * (s * s + regularization);
  }
  if (!(rho > 0.0) && regularization == 0.0 && !allow_degenerate) {
    throw ConfigError(
        "volatility vanishes on the grid (min |sigma| = 0); use the "
        "degenerate solver path");
  }
  return EllipticOperands{std::move(conjugate), std::move(drift),
                          std::move(volatility), std::move(m), rho,
                          regularization, true};
}

std::string to_string(ResolventStrategy s) {
  switch (s) {
    case ResolventStrategy::newton: return "newton";
    case ResolventStrategy::homotopy: return "homotopy";
    case ResolventStrategy::picard: return "picard";
  }
  return "?";
}

Field apply_A(const EllipticOperands& ops, const Field& y) {
  Field w(y.grid());
  for (std::size_t k = 0; k < y.size(); ++k) {
    w[k] = ops.conjugate.value(ops.multiplier[k] * y[k]);
  }
  Field out = diff2(w);
  out *= -1.0;
  const Field& f = ops.drift.f();
  const Field dy = diff1_upwind(y, f);
  for (std::size_t k = 0; k < y.size(); ++k) out[k] -= f[k] * dy[k];
  return out;
}

Field resolvent_residual(const EllipticOperands& ops,
                         const ResolventConfig& cfg, const Field& eta,
                         const Field& y) {
  Field r = apply_A(ops, y);
  if (ops.with_perturbation) r += apply_B(ops.drift, y);
  if (cfg.nu != 0.0) {
    const Field d2y = diff2(y);
    for (std::size_t k = 0; k < y.size(); ++k) {
      r[k] += cfg.nu * (-d2y[k] +
                        ops.conjugate.value(ops.multiplier[k] * y[k]));
    }
  }
  for (std::size_t k = 0; k < y.size(); ++k) {
    r[k] += cfg.lambda * y[k] - eta[k];
  }
  r[0] = 0.0;
  r[y.size() - 1] = 0.0;
  return r;
}

namespace {

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

// The nodal system lambda y + A y + B y + nu(...) = eta restricted to the
// interior nodes.
class NodalSystem {
 public:
  NodalSystem(const EllipticOperands& ops, double lambda, double nu,
              const Field& eta)
      : ops_(ops), lambda_(lambda), nu_(nu), eta_(eta),
        n_(eta.size()), m_(n_ - 2), h_(eta.grid().spacing()),
        inv_h2_(1.0 / (h_ * h_)),
        nonlocal_(ops.with_perturbation && !ops.drift.local()),
        w_(n_), c_(n_) {}

  double residual(const Field& y, std::vector<double>& r) {
    const auto& conj = ops_.conjugate;
    const auto& mult = ops_.multiplier;
    const auto& f = ops_.drift.f();
    for (std::size_t k = 0; k < n_; ++k) w_[k] = conj.value(mult[k] * y[k]);
    Field dpsi(y.grid());
    if (nonlocal_) dpsi = poisson_gradient(y);
    r.assign(n_, 0.0);
    double norm = 0.0;
    for (std::size_t k = 1; k + 1 < n_; ++k) {
      double v = lambda_ * y[k] -
                 (w_[k - 1] - 2.0 * w_[k] + w_[k + 1]) * inv_h2_;
      v -= f[k] >= 0.0 ? f[k] * (y[k + 1] - y[k]) / h_
                       : f[k] * (y[k] - y[k - 1]) / h_;
      if (ops_.with_perturbation) {
        v += ops_.drift.d2f()[k] * dpsi[k] - 2.0 * ops_.drift.df()[k] * y[k];
      }
      if (nu_ != 0.0) {
        v += nu_ * (-(y[k - 1] - 2.0 * y[k] + y[k + 1]) * inv_h2_ + w_[k]);
      }
      v -= eta_[k];
      r[k] = v;
      norm += std::abs(v);
    }
    return norm * h_;
  }

  // Newton direction: solves J delta = -r.  Returns false on a singular
  // factorization.
  bool direction(const Field& y, const std::vector<double>& r,
                 std::vector<double>& delta) {
    const auto& conj = ops_.conjugate;
    const auto& mult = ops_.multiplier;
    const auto& f = ops_.drift.f();
    for (std::size_t k = 0; k < n_; ++k) {
      c_[k] = conj.derivative(mult[k] * y[k]) * mult[k];
    }
    lo_.assign(m_, 0.0);
    di_.assign(m_, 0.0);
    up_.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t k = i + 1;
      double d = lambda_ + 2.0 * c_[k] * inv_h2_;
      double l = -c_[k - 1] * inv_h2_;
      double u = -c_[k + 1] * inv_h2_;
      if (f[k] >= 0.0) {
        d += f[k] / h_;
        u -= f[k] / h_;
      } else {
        d -= f[k] / h_;
        l += f[k] / h_;
      }
      if (ops_.with_perturbation) d -= 2.0 * ops_.drift.df()[k];
      if (nu_ != 0.0) {
        d += nu_ * (2.0 * inv_h2_ + c_[k]);
        l -= nu_ * inv_h2_;
        u -= nu_ * inv_h2_;
      }
      lo_[i] = l;
      di_[i] = d;
      up_[i] = u;
    }
    delta.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) delta[i] = -r[i + 1];
    if (!nonlocal_) {
      detail::solve_tridiagonal(lo_, di_, up_, delta);
      return std::all_of(delta.begin(), delta.end(),
                         [](double v) { return std::isfinite(v); });
    }
    return solve_augmented(delta);
  }

 private:
  // [J_loc  F2 D1] [delta]   [-r]
  // [ -I      K  ] [ psi ] = [ 0]   with K psi = delta, i.e. psi = Phi(delta).
  bool solve_augmented(std::vector<double>& delta) {
    using Sparse = Eigen::SparseMatrix<double>;
    const auto m = static_cast<Eigen::Index>(m_);
    const auto& d2f = ops_.drift.d2f();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(10 * m_);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      t.emplace_back(i, i, di_[iu]);
      if (i > 0) t.emplace_back(i, i - 1, lo_[iu]);
      if (i + 1 < m) t.emplace_back(i, i + 1, up_[iu]);
      const double g = d2f[iu + 1] / (2.0 * h_);
      if (i + 1 < m) t.emplace_back(i, m + i + 1, g);
      if (i > 0) t.emplace_back(i, m + i - 1, -g);
      t.emplace_back(m + i, i, -1.0);
      t.emplace_back(m + i, m + i, 2.0 * inv_h2_);
      if (i > 0) t.emplace_back(m + i, m + i - 1, -inv_h2_);
      if (i + 1 < m) t.emplace_back(m + i, m + i + 1, -inv_h2_);
    }
    Sparse a(2 * m, 2 * m);
    a.setFromTriplets(t.begin(), t.end());
    if (!analyzed_) {
      lu_.analyzePattern(a);
      analyzed_ = true;
    }
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success) return false;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * m);
    for (Eigen::Index i = 0; i < m; ++i) rhs[i] = delta[static_cast<std::size_t>(i)];
    const Eigen::VectorXd sol = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success) return false;
    for (Eigen::Index i = 0; i < m; ++i) {
      delta[static_cast<std::size_t>(i)] = sol[i];
      if (!std::isfinite(sol[i])) return false;
    }
    return true;
  }

  const EllipticOperands& ops_;
  double lambda_, nu_;
  const Field& eta_;
  std::size_t n_, m_;
  double h_, inv_h2_;
  bool nonlocal_;
  std::vector<double> w_, c_, lo_, di_, up_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  bool analyzed_ = false;
};

NewtonOutcome damped_newton(const EllipticOperands& ops, double lambda,
                            double nu, const Field& eta, Field& y,
                            int max_iterations, double damping, double tol) {
  NodalSystem sys(ops, lambda, nu, eta);
  std::vector<double> r, r_trial, delta;
  NewtonOutcome out;
  double norm = sys.residual(y, r);
  Field trial(y.grid());
  while (norm > tol) {
    if (out.iterations >= max_iterations || !std::isfinite(norm)) break;
    ++out.iterations;
    if (!sys.direction(y, r, delta)) break;
    double t = damping;
    bool accepted = false;
    while (t >= 1.0 / 1024.0) {
      for (std::size_t i = 0; i < delta.size(); ++i) {
        trial[i + 1] = y[i + 1] + t * delta[i];
      }
      const double trial_norm = sys.residual(trial, r_trial);
      if (trial_norm <= (1.0 - 1e-4 * t) * norm) {
        y = trial;
        r.swap(r_trial);
        norm = trial_norm;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  out.residual = norm;
  out.converged = norm <= tol;
  return out;
}

Field initial_guess(const Field& eta, double lambda, const Field* warm) {
  Field y = (warm && warm->grid() == eta.grid()) ? *warm
                                                 : (1.0 / lambda) * eta;
  y[0] = 0.0;
  y[y.size() - 1] = 0.0;
  return y;
}

}  // namespace

ResolventResult solve_resolvent(const EllipticOperands& ops,
                                const ResolventConfig& cfg, const Field& eta,
                                const Field* warm_start) {
  if (!(eta.grid() == ops.grid())) {
    throw ConfigError("right-hand side lives on a different grid");
  }
  const double lambda0 = ops.drift.lambda0();
  if (!(cfg.lambda > lambda0)) {
    throw ConfigError("resolvent needs lambda > ||f'||_inf = " +
                      std::to_string(lambda0) + ", got " +
                      std::to_string(cfg.lambda));
  }
  for (double v : eta.values()) {
    if (!std::isfinite(v)) throw ConfigError("right-hand side is not finite");
  }
  const double tol =
      cfg.tol_res > 0.0 ? cfg.tol_res : 1e-10 * std::max(1.0, eta.l1_norm());

  ResolventDiagnostics diag;
  diag.tolerance = tol;
  Field y = initial_guess(eta, cfg.lambda, warm_start);
  NewtonOutcome nw = damped_newton(ops, cfg.lambda, cfg.nu, eta, y,
                                   cfg.max_newton, cfg.damping, tol);
  diag.newton_iterations = nw.iterations;
  double last = nw.residual;

  const int fallback_budget = std::max(cfg.max_newton, 50);
  if (!nw.converged && cfg.allow_fallback) {
    // Homotopy in the regularization weight, started from eta / lambda.
    diag.strategy = ResolventStrategy::homotopy;
    Field z = initial_guess(eta, cfg.lambda, nullptr);
    bool ok = true;
    for (double extra : {1e-2, 1e-4, 1e-6, 0.0}) {
      const NewtonOutcome stage =
          damped_newton(ops, cfg.lambda, cfg.nu + extra, eta, z,
                        fallback_budget, cfg.damping, tol);
      diag.newton_iterations += stage.iterations;
      last = stage.residual;
      if (!stage.converged) {
        ok = false;
        break;
      }
    }
    if (ok) {
      y = z;
      nw.converged = true;
    }
  }

  if (!nw.converged && cfg.allow_fallback) {
    // Proximal iteration y <- (lambda + delta)-resolvent of eta + delta y.
    diag.strategy = ResolventStrategy::picard;
    NodalSystem outer(ops, cfg.lambda, cfg.nu, eta);
    std::vector<double> r;
    double shift = cfg.lambda;
    double norm = outer.residual(y, r);
    while (norm > tol && diag.picard_iterations < cfg.max_picard) {
      ++diag.picard_iterations;
      Field shifted = eta;
      for (std::size_t k = 0; k < y.size(); ++k) shifted[k] += shift * y[k];
      Field next = y;
      const NewtonOutcome inner =
          damped_newton(ops, cfg.lambda + shift, cfg.nu, shifted, next,
                        fallback_budget, cfg.damping, 0.1 * tol);
      diag.newton_iterations += inner.iterations;
      if (!inner.converged) {
        shift *= 2.0;
        continue;
      }
      y = next;
      norm = outer.residual(y, r);
    }
    last = norm;
    nw.converged = norm <= tol;
  }

  if (!nw.converged) {
    throw SolverError("resolvent iteration budget exhausted (residual " +
                          std::to_string(last) + ", tolerance " +
                          std::to_string(tol) + ")",
                      last);
  }

  diag.residual = resolvent_residual(ops, cfg, eta, y).l1_norm();
  if (diag.residual > 10.0 * tol) {
    throw SolverError("resolvent certificate failed: independent residual " +
                          std::to_string(diag.residual),
                      diag.residual);
  }
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!ops.conjugate.in_table_range(ops.multiplier[k] * y[k])) {
      ++diag.out_of_range_nodes;
    }
  }
  return {std::move(y), diag};
}

}  // namespace mildhjb
