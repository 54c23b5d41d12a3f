#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mildhjb {

/// Uniform mesh on the truncated line [-L, L].  The node count is odd so
/// that x = 0 is a node.
class Grid1D {
 public:
  Grid1D(double half_width, std::size_t nodes);

  double half_width() const { return half_width_; }
  std::size_t size() const { return nodes_; }
  double spacing() const { return spacing_; }
  double x(std::size_t k) const;
  std::vector<double> coordinates() const;

  // Index of the node at or to the left of x, clamped to [0, n-2].
  std::size_t cell_of(double x) const;

  bool operator==(const Grid1D& other) const = default;

 private:
  double half_width_;
  std::size_t nodes_;
  double spacing_;
};

/// Grid function: one value per node.
class Field {
 public:
  explicit Field(Grid1D grid);
  Field(Grid1D grid, std::vector<double> values);

  static Field from_function(const Grid1D& grid,
                             const std::function<double(double)>& fn);

  const Grid1D& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  /// Discrete L1 norm h * sum |y_k|.
  double l1_norm() const;
  double linf_norm() const;
  /// h * sum y_k
  double integral() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

 private:
  Grid1D grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Discrete L1 distance between two fields on the same grid.
double l1_distance(const Field& a, const Field& b);

/// Solves -Psi'' = z with Psi(-L) = Psi(L) = 0 (3-point stencil, O(n)).
Field poisson_solve(const Field& z);

/// Central-difference derivative of poisson_solve(z), one-sided at the ends.
Field poisson_gradient(const Field& z);

/// Standard 3-point second difference; zero ghost values beyond the ends.
Field diff2(const Field& y);

/// One-sided first difference chosen by the sign of `wind`: forward where
/// wind >= 0, backward where wind < 0.  This is the monotone choice for the
/// transport term -wind * y'.  Zero ghost values beyond the ends.
Field diff1_upwind(const Field& y, const Field& wind);

/// Measured L1 -> L-infinity operator norms of the discrete Green operator.
struct GreenBounds {
  double gradient;  // sup |Psi'| / ||z||_1
  double total;     // (sup |Psi| + sup |Psi'|) / ||z||_1
};

GreenBounds measure_green_bounds(const Grid1D& grid);

namespace detail {

/// Thomas algorithm for a tridiagonal system; `lower[0]` and
/// `upper[n-1]` are ignored.  Overwrites `rhs` with the solution.
void solve_tridiagonal(std::span<const double> lower,
                       std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs);

}  // namespace detail

}  // namespace mildhjb
