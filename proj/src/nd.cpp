#include "mildhjb/nd.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "mildhjb/error.hpp"

namespace mildhjb {

Grid2D::Grid2D(double half_width, std::size_t nodes)
    : half_width_(half_width), nodes_(nodes), spacing_(0.0) {
  if (!(half_width > 0.0)) throw ConfigError("2-D grid half width must be positive");
  if (nodes < 5 || nodes % 2 == 0) {
    throw ConfigError("2-D grid node count must be odd and >= 5");
  }
  spacing_ = 2.0 * half_width / static_cast<double>(nodes - 1);
}

double Grid2D::coord(std::size_t i) const {
  const std::size_t mid = (nodes_ - 1) / 2;
  if (i >= mid) return static_cast<double>(i - mid) * spacing_;
  return -static_cast<double>(mid - i) * spacing_;
}

Field2D::Field2D(Grid2D grid) : grid_(grid), v_(grid.size(), 0.0) {}

Field2D Field2D::from_function(
    const Grid2D& grid, const std::function<double(double, double)>& fn) {
  Field2D f(grid);
  for (std::size_t j = 0; j < grid.nodes(); ++j) {
    for (std::size_t i = 0; i < grid.nodes(); ++i) {
      f(i, j) = fn(grid.coord(i), grid.coord(j));
    }
  }
  return f;
}

double Field2D::l1_norm() const {
  double s = 0.0;
  for (double v : v_) s += std::abs(v);
  return s * grid_.spacing() * grid_.spacing();
}

double Field2D::linf_norm() const {
  double s = 0.0;
  for (double v : v_) s = std::max(s, std::abs(v));
  return s;
}

double Field2D::integral() const {
  double s = 0.0;
  for (double v : v_) s += v;
  return s * grid_.spacing() * grid_.spacing();
}

double l1_distance(const Field2D& a, const Field2D& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) {
    s += std::abs(a.values()[k] - b.values()[k]);
  }
  return s * a.grid().spacing() * a.grid().spacing();
}

namespace {

struct StencilEntry {
  int di, dj;
  double coef;
};

// Nine-point stencil of L on a grid with spacing h.
std::array<StencilEntry, 9> stencil(const Eigen::Matrix2d& b, double h) {
  const double ih2 = 1.0 / (h * h);
  const double cx = b(0, 0) * ih2, cy = b(1, 1) * ih2;
  const double cxy = 2.0 * b(0, 1) * ih2 / 4.0;
  return {{{0, 0, -2.0 * cx - 2.0 * cy},
           {1, 0, cx},
           {-1, 0, cx},
           {0, 1, cy},
           {0, -1, cy},
           {1, 1, cxy},
           {-1, -1, cxy},
           {1, -1, -cxy},
           {-1, 1, -cxy}}};
}

}  // namespace

Field2D apply_L(const Eigen::Matrix2d& b, const Field2D& z) {
  const Grid2D& g = z.grid();
  const auto st = stencil(b, g.spacing());
  Field2D out(g);
  for (std::size_t j = 1; j + 1 < g.nodes(); ++j) {
    for (std::size_t i = 1; i + 1 < g.nodes(); ++i) {
      double s = 0.0;
      for (const auto& e : st) {
        s += e.coef * z(static_cast<std::size_t>(static_cast<long>(i) + e.di),
                        static_cast<std::size_t>(static_cast<long>(j) + e.dj));
      }
      out(i, j) = s;
    }
  }
  return out;
}

NdProblemSpec NdProblemSpec::build(
    const Grid2D& grid, const Eigen::MatrixXd& factor,
    const std::function<double(double, double)>& sigma0,
    const std::function<double(double, double)>& g,
    const std::function<double(double, double)>& g0, double horizon) {
  if (factor.rows() != 2 || factor.cols() < 1) {
    throw ConfigError("diffusion factor a must have 2 rows");
  }
  if (!(horizon > 0.0)) throw ConfigError("horizon T must be positive");
  const Eigen::Matrix2d b = factor * factor.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(b);
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 0.0)) {
    throw ConfigError("b = a a^T is not positive definite (min eigenvalue " +
                      std::to_string(lmin) + ")");
  }
  NdProblemSpec spec{grid,
                     factor,
                     b,
                     lmin,
                     Field2D::from_function(grid, sigma0),
                     0.0,
                     Field2D::from_function(grid, g),
                     Field2D::from_function(grid, g0),
                     Field2D(grid),
                     Field2D(grid),
                     horizon};
  spec.rho0 = std::numeric_limits<double>::infinity();
  for (double v : spec.sigma0.values()) spec.rho0 = std::min(spec.rho0, std::abs(v));
  if (!(spec.rho0 > 0.0)) throw ConfigError("sigma0 vanishes on the 2-D grid");
  spec.initial = apply_L(b, spec.terminal);
  spec.source = apply_L(b, spec.running);
  for (double& v : spec.initial.values()) v = -v;
  for (double& v : spec.source.values()) v = -v;
  spec.comparison_valid =
      2.0 * std::abs(b(0, 1)) <= std::min(b(0, 0), b(1, 1));
  if (!spec.comparison_valid) {
    spec.warning =
        "strongly anisotropic b (2|b12| > min(b11, b22)): cross stencil is "
        "not monotone, comparison-principle checks skipped";
  }
  return spec;
}

namespace {

class NdSystem {
 public:
  NdSystem(const NdProblemSpec& spec, const ConjugateHamiltonian& conj,
           double lambda, const Field2D& eta)
      : spec_(spec), conj_(conj), lambda_(lambda), eta_(eta),
        n_(spec.grid.nodes()), st_(stencil(spec.diffusion, spec.grid.spacing())),
        m_(spec.grid.size()), w_(m_), c_(m_) {
    for (std::size_t k = 0; k < m_.size(); ++k) {
      const double s = spec.sigma0.values()[k];
      m_[k] = 0.5 * s * s;
    }
    // Interior numbering.
    col_.assign(spec.grid.size(), -1);
    int next = 0;
    for (std::size_t j = 1; j + 1 < n_; ++j) {
      for (std::size_t i = 1; i + 1 < n_; ++i) {
        col_[spec.grid.index(i, j)] = next++;
      }
    }
    unknowns_ = next;
  }

  int unknowns() const { return unknowns_; }

  double residual(const Field2D& y, std::vector<double>& r) {
    const auto& yv = y.values();
    for (std::size_t k = 0; k < yv.size(); ++k) w_[k] = conj_.value(m_[k] * yv[k]);
    r.assign(static_cast<std::size_t>(unknowns_), 0.0);
    double norm = 0.0;
    for (std::size_t j = 1; j + 1 < n_; ++j) {
      for (std::size_t i = 1; i + 1 < n_; ++i) {
        const std::size_t k = spec_.grid.index(i, j);
        double lw = 0.0;
        for (const auto& e : st_) {
          lw += e.coef * w_[neighbour(i, j, e)];
        }
        const double v = lambda_ * yv[k] - lw - eta_.values()[k];
        r[static_cast<std::size_t>(col_[k])] = v;
        norm += std::abs(v);
      }
    }
    const double h = spec_.grid.spacing();
    return norm * h * h;
  }

  bool direction(const Field2D& y, const std::vector<double>& r,
                 std::vector<double>& delta) {
    const auto& yv = y.values();
    for (std::size_t k = 0; k < yv.size(); ++k) {
      c_[k] = conj_.derivative(m_[k] * yv[k]) * m_[k];
    }
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(unknowns_) * 9);
    for (std::size_t j = 1; j + 1 < n_; ++j) {
      for (std::size_t i = 1; i + 1 < n_; ++i) {
        const int row = col_[spec_.grid.index(i, j)];
        t.emplace_back(row, row, lambda_);
        for (const auto& e : st_) {
          const std::size_t nb = neighbour(i, j, e);
          const int col = col_[nb];
          if (col < 0) continue;
          t.emplace_back(row, col, -e.coef * c_[nb]);
        }
      }
    }
    Eigen::SparseMatrix<double> a(unknowns_, unknowns_);
    a.setFromTriplets(t.begin(), t.end());
    if (!analyzed_) {
      lu_.analyzePattern(a);
      analyzed_ = true;
    }
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success) return false;
    Eigen::VectorXd rhs(unknowns_);
    for (int q = 0; q < unknowns_; ++q) rhs[q] = -r[static_cast<std::size_t>(q)];
    const Eigen::VectorXd sol = lu_.solve(rhs);
    delta.assign(sol.data(), sol.data() + sol.size());
    return lu_.info() == Eigen::Success &&
           std::all_of(delta.begin(), delta.end(),
                       [](double v) { return std::isfinite(v); });
  }

  void apply(Field2D& y, const std::vector<double>& delta, double t) const {
    for (std::size_t k = 0; k < col_.size(); ++k) {
      if (col_[k] >= 0) y.values()[k] += t * delta[static_cast<std::size_t>(col_[k])];
    }
  }

 private:
  std::size_t neighbour(std::size_t i, std::size_t j, const StencilEntry& e) const {
    return spec_.grid.index(static_cast<std::size_t>(static_cast<long>(i) + e.di),
                            static_cast<std::size_t>(static_cast<long>(j) + e.dj));
  }

  const NdProblemSpec& spec_;
  const ConjugateHamiltonian& conj_;
  double lambda_;
  const Field2D& eta_;
  std::size_t n_;
  std::array<StencilEntry, 9> st_;
  std::vector<double> m_, w_, c_;
  std::vector<int> col_;
  int unknowns_ = 0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  bool analyzed_ = false;
};

void zero_boundary(Field2D& y) {
  const std::size_t n = y.grid().nodes();
  for (std::size_t q = 0; q < n; ++q) {
    y(q, 0) = y(q, n - 1) = y(0, q) = y(n - 1, q) = 0.0;
  }
}

}  // namespace

NdResolventResult solve_resolvent_nd(const NdProblemSpec& spec,
                                     const ConjugateHamiltonian& conj,
                                     double lambda, const Field2D& eta,
                                     const Field2D* warm_start, double tol,
                                     int max_newton) {
  if (!(lambda > 0.0)) throw ConfigError("2-D resolvent needs lambda > 0");
  if (tol <= 0.0) tol = 1e-10 * std::max(1.0, eta.l1_norm());
  Field2D y = warm_start ? *warm_start : eta;
  if (!warm_start) {
    for (double& v : y.values()) v /= lambda;
  }
  zero_boundary(y);
  NdSystem sys(spec, conj, lambda, eta);
  std::vector<double> r, rt, delta;
  double norm = sys.residual(y, r);
  int it = 0;
  Field2D trial = y;
  while (norm > tol && it < max_newton) {
    ++it;
    if (!sys.direction(y, r, delta)) break;
    double t = 1.0;
    bool accepted = false;
    while (t >= 1.0 / 1024.0) {
      trial = y;
      sys.apply(trial, delta, t);
      const double tn = sys.residual(trial, rt);
      if (tn <= (1.0 - 1e-4 * t) * norm) {
        y = trial;
        r.swap(rt);
        norm = tn;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  if (!(norm <= tol)) {
    throw SolverError("2-D resolvent did not converge (residual " +
                          std::to_string(norm) + ")",
                      norm);
  }
  return {std::move(y), it, norm};
}

MildSolution2D mild_solve_nd(const NdProblemSpec& spec,
                             const ConjugateHamiltonian& conj, double eps,
                             std::size_t steps) {
  if (!(eps > 0.0)) throw ConfigError("time step must be positive");
  if (steps == 0) {
    steps = static_cast<std::size_t>(std::floor(spec.horizon / eps));
  }
  MildSolution2D sol{spec.grid, eps};
  Field2D y = spec.initial;
  zero_boundary(y);
  sol.times.push_back(0.0);
  sol.snapshots.push_back(y);
  sol.mass.push_back(y.integral());
  sol.newton_iterations.push_back(0);
  for (std::size_t i = 1; i <= steps; ++i) {
    Field2D eta = spec.source;
    for (std::size_t k = 0; k < eta.values().size(); ++k) {
      eta.values()[k] += y.values()[k] / eps;
    }
    NdResolventResult r = solve_resolvent_nd(spec, conj, 1.0 / eps, eta, &y);
    y = std::move(r.y);
    sol.times.push_back(static_cast<double>(i) * eps);
    sol.snapshots.push_back(y);
    sol.mass.push_back(y.integral());
    sol.newton_iterations.push_back(r.iterations);
  }
  return sol;
}

Field2D reconstruct_value_nd(const NdProblemSpec& spec, const Field2D& y) {
  const Grid2D& g = spec.grid;
  const std::size_t n = g.nodes();
  const auto st = stencil(spec.diffusion, g.spacing());
  std::vector<int> col(g.size(), -1);
  int next = 0;
  for (std::size_t j = 1; j + 1 < n; ++j)
    for (std::size_t i = 1; i + 1 < n; ++i) col[g.index(i, j)] = next++;
  std::vector<Eigen::Triplet<double>> t;
  Eigen::VectorXd rhs(next);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const int row = col[g.index(i, j)];
      rhs[row] = y(i, j);
      for (const auto& e : st) {
        const int c = col[g.index(static_cast<std::size_t>(static_cast<long>(i) + e.di),
                                  static_cast<std::size_t>(static_cast<long>(j) + e.dj))];
        if (c >= 0) t.emplace_back(row, c, -e.coef);
      }
    }
  }
  Eigen::SparseMatrix<double> a(next, next);
  a.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
  if (lu.info() != Eigen::Success) throw SolverError("-L phi = y: factorization failed", 0.0);
  const Eigen::VectorXd sol = lu.solve(rhs);
  Field2D phi(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (col[k] >= 0) phi.values()[k] = sol[col[k]];
  }
  return phi;
}

void write_field2d_csv(std::ostream& os, const Field2D& f,
                       const std::string& name) {
  const Grid2D& g = f.grid();
  os << std::setprecision(17);
  os << "# field " << name << "\n";
  os << "# grid half_width=" << g.half_width() << " nodes=" << g.nodes()
     << " spacing=" << g.spacing() << "\n";
  os << "# units: i [index], j [index], x [state], y [state], value [" << name
     << "]\n";
  os << "i,j,x,y,value\n";
  for (std::size_t j = 0; j < g.nodes(); ++j) {
    for (std::size_t i = 0; i < g.nodes(); ++i) {
      os << i << ',' << j << ',' << g.coord(i) << ',' << g.coord(j) << ','
         << f(i, j) << '\n';
    }
  }
}

}  // namespace mildhjb
