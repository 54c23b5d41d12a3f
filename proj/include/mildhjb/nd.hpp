#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mildhjb/conjugation.hpp"

namespace mildhjb {

/// Uniform square mesh on [-L, L]^2 with the same odd node count per axis.
class Grid2D {
 public:
  Grid2D(double half_width, std::size_t nodes);

  double half_width() const { return half_width_; }
  std::size_t nodes() const { return nodes_; }
  std::size_t size() const { return nodes_ * nodes_; }
  double spacing() const { return spacing_; }
  double coord(std::size_t i) const;
  std::size_t index(std::size_t i, std::size_t j) const { return j * nodes_ + i; }
  bool interior(std::size_t i, std::size_t j) const {
    return i > 0 && j > 0 && i + 1 < nodes_ && j + 1 < nodes_;
  }

  bool operator==(const Grid2D& other) const = default;

 private:
  double half_width_;
  std::size_t nodes_;
  double spacing_;
};

/// Values at (x_i, y_j), stored with i fastest.
class Field2D {
 public:
  explicit Field2D(Grid2D grid);
  static Field2D from_function(const Grid2D& grid,
                               const std::function<double(double, double)>& fn);

  const Grid2D& grid() const { return grid_; }
  double& operator()(std::size_t i, std::size_t j) { return v_[grid_.index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const {
    return v_[grid_.index(i, j)];
  }
  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  double l1_norm() const;
  double linf_norm() const;
  double integral() const;

 private:
  Grid2D grid_;
  std::vector<double> v_{};
};

double l1_distance(const Field2D& a, const Field2D& b);

/// Drift-free 2-D problem with sigma(x) = sigma0(x) a and L z = sum b_ij z_ij,
/// b = a a^T.
struct NdProblemSpec {
  Grid2D grid;
  Eigen::MatrixXd factor;  // a, 2 x m
  Eigen::Matrix2d diffusion;  // b
  double min_eigenvalue = 0.0;
  Field2D sigma0;
  double rho0 = 0.0;
  Field2D running;   // g
  Field2D terminal;  // g0
  Field2D initial;   // y0 = -L g0
  Field2D source;    // g1 = -L g
  double horizon = 1.0;
  /// 2 |b12| <= min(b11, b22); outside that range the centred cross stencil
  /// is not monotone and comparison-type checks are skipped.
  bool comparison_valid = true;
  std::string warning{};

  static NdProblemSpec build(
      const Grid2D& grid, const Eigen::MatrixXd& factor,
      const std::function<double(double, double)>& sigma0,
      const std::function<double(double, double)>& g,
      const std::function<double(double, double)>& g0, double horizon);
};

/// b11 z_xx + b22 z_yy + 2 b12 z_xy with 3-point axis stencils and the
/// 4-corner centred cross difference.  Zero at the boundary nodes.
Field2D apply_L(const Eigen::Matrix2d& b, const Field2D& z);

struct NdResolventResult {
  Field2D y;
  int iterations = 0;
  double residual = 0.0;  // discrete L1
};

/// lambda y - L(H*(sigma0^2/2 y)) = eta with y = 0 on the boundary, by
/// damped Newton with a sparse 9-point Jacobian (sparse LU inner solve).
NdResolventResult solve_resolvent_nd(const NdProblemSpec& spec,
                                     const ConjugateHamiltonian& conj,
                                     double lambda, const Field2D& eta,
                                     const Field2D* warm_start = nullptr,
                                     double tol = 0.0, int max_newton = 100);

struct MildSolution2D {
  Grid2D grid;
  double eps = 0.0;
  std::vector<double> times{};
  std::vector<Field2D> snapshots{};
  std::vector<double> mass{};       // integral of each snapshot
  std::vector<int> newton_iterations{};
};

/// Implicit steps with lambda = 1/eps; `steps` overrides floor(T / eps).
MildSolution2D mild_solve_nd(const NdProblemSpec& spec,
                             const ConjugateHamiltonian& conj, double eps,
                             std::size_t steps = 0);

/// Solves -L phi = y with phi = 0 on the boundary.
Field2D reconstruct_value_nd(const NdProblemSpec& spec, const Field2D& y);

/// CSV rows i, j, x, y, value after a metadata header.
void write_field2d_csv(std::ostream& os, const Field2D& f,
                       const std::string& name);

}  // namespace mildhjb
