#include "mildhjb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mildhjb/error.hpp"

namespace mildhjb {

Grid1D::Grid1D(double half_width, std::size_t nodes)
    : half_width_(half_width), nodes_(nodes), spacing_(0.0) {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw ConfigError("grid half width must be positive, got " +
                      std::to_string(half_width));
  }
  if (nodes < 5 || nodes % 2 == 0) {
    throw ConfigError("grid node count must be odd and >= 5, got " +
                      std::to_string(nodes));
  }
  spacing_ = 2.0 * half_width / static_cast<double>(nodes - 1);
}

double Grid1D::x(std::size_t k) const {
  // Mirror about the centre so the mesh is exactly symmetric.
  const std::size_t mid = (nodes_ - 1) / 2;
  if (k >= mid) return static_cast<double>(k - mid) * spacing_;
  return -static_cast<double>(mid - k) * spacing_;
}

std::vector<double> Grid1D::coordinates() const {
  std::vector<double> xs(nodes_);
  for (std::size_t k = 0; k < nodes_; ++k) xs[k] = x(k);
  return xs;
}

std::size_t Grid1D::cell_of(double xq) const {
  const double s = (xq + half_width_) / spacing_;
  if (!(s > 0.0)) return 0;
  const auto k = static_cast<std::size_t>(std::floor(s));
  return std::min(k, nodes_ - 2);
}

Field::Field(Grid1D grid) : grid_(grid), values_(grid.size(), 0.0) {}

Field::Field(Grid1D grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw ConfigError("field length " + std::to_string(values_.size()) +
                      " does not match grid size " +
                      std::to_string(grid_.size()));
  }
}

Field Field::from_function(const Grid1D& grid,
                           const std::function<double(double)>& fn) {
  Field out(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = fn(grid.x(k));
  return out;
}

double Field::l1_norm() const {
  double s = 0.0;
  for (double v : values_) s += std::abs(v);
  return s * grid_.spacing();
}

double Field::linf_norm() const {
  double s = 0.0;
  for (double v : values_) s = std::max(s, std::abs(v));
  return s;
}

double Field::integral() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * grid_.spacing();
}

Field& Field::operator+=(const Field& other) {
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other[k];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other[k];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

double l1_distance(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s * a.grid().spacing();
}

namespace detail {

void solve_tridiagonal(std::span<const double> lower,
                       std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs) {
  const std::size_t n = diag.size();
  if (n == 0) return;
  std::vector<double> c(n);
  double beta = diag[0];
  rhs[0] /= beta;
  for (std::size_t i = 1; i < n; ++i) {
    c[i] = upper[i - 1] / beta;
    beta = diag[i] - lower[i] * c[i];
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i + 1] * rhs[i + 1];
}

}  // namespace detail

Field poisson_solve(const Field& z) {
  const Grid1D& g = z.grid();
  const std::size_t n = g.size();
  const std::size_t m = n - 2;
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  std::vector<double> lo(m, -inv_h2), di(m, 2.0 * inv_h2), up(m, -inv_h2);
  std::vector<double> rhs(z.values().begin() + 1, z.values().end() - 1);
  detail::solve_tridiagonal(lo, di, up, rhs);
  Field psi(g);
  std::copy(rhs.begin(), rhs.end(), psi.values().begin() + 1);
  return psi;
}

namespace {

Field central_derivative(const Field& psi) {
  const Grid1D& g = psi.grid();
  const std::size_t n = g.size();
  const double h = g.spacing();
  Field d(g);
  d[0] = (psi[1] - psi[0]) / h;
  d[n - 1] = (psi[n - 1] - psi[n - 2]) / h;
  for (std::size_t k = 1; k + 1 < n; ++k)
    d[k] = (psi[k + 1] - psi[k - 1]) / (2.0 * h);
  return d;
}

}  // namespace

Field poisson_gradient(const Field& z) {
  return central_derivative(poisson_solve(z));
}

Field diff2(const Field& y) {
  const Grid1D& g = y.grid();
  const std::size_t n = g.size();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  Field out(g);
  for (std::size_t k = 0; k < n; ++k) {
    const double left = k > 0 ? y[k - 1] : 0.0;
    const double right = k + 1 < n ? y[k + 1] : 0.0;
    out[k] = (left - 2.0 * y[k] + right) * inv_h2;
  }
  return out;
}

Field diff1_upwind(const Field& y, const Field& wind) {
  const Grid1D& g = y.grid();
  const std::size_t n = g.size();
  const double h = g.spacing();
  Field out(g);
  for (std::size_t k = 0; k < n; ++k) {
    if (wind[k] >= 0.0) {
      const double right = k + 1 < n ? y[k + 1] : 0.0;
      out[k] = (right - y[k]) / h;
    } else {
      const double left = k > 0 ? y[k - 1] : 0.0;
      out[k] = (y[k] - left) / h;
    }
  }
  return out;
}

GreenBounds measure_green_bounds(const Grid1D& grid) {
  // The L1 -> L-inf norm of a matrix operator is its largest entry divided
  // by h, so probing unit masses at every interior node is exact.
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  double value_bound = 0.0;
  double gradient_bound = 0.0;
  Field z(grid);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    z[j] = 1.0 / h;
    const Field psi = poisson_solve(z);
    const Field dpsi = central_derivative(psi);
    value_bound = std::max(value_bound, psi.linf_norm());
    gradient_bound = std::max(gradient_bound, dpsi.linf_norm());
    z[j] = 0.0;
  }
  return {gradient_bound, value_bound + gradient_bound};
}

}  // namespace mildhjb
