#include "mildhjb/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "mildhjb/error.hpp"

namespace mildhjb {

ValueFunction reconstruct_value(const MildSolution& sol) {
  ValueFunction v{sol.grid, sol.horizon};
  const std::size_t count = sol.snapshots.size();
  for (std::size_t r = 0; r < count; ++r) {
    // Ascending in t = T - t_i, i.e. newest snapshot first.
    const std::size_t i = count - 1 - r;
    const Field& y = sol.snapshots[i];
    v.times.push_back(std::max(0.0, sol.horizon - sol.times[i]));
    v.phi.push_back(poisson_solve(y));
    v.phi_x.push_back(poisson_gradient(y));
    v.phi_xx.push_back(-1.0 * y);
  }
  return v;
}

FeedbackPolicy synthesize_feedback(const ValueFunction& v,
                                   const EllipticOperands& ops,
                                   const ConjugateHamiltonian& conj) {
  FeedbackPolicy p{v.grid, v.times, {}};
  p.table.reserve(v.times.size());
  for (const Field& pxx : v.phi_xx) {
    std::vector<double> row(pxx.size());
    for (std::size_t k = 0; k < pxx.size(); ++k) {
      const double s = ops.volatility[k];
      row[k] = std::max(0.0, conj.derivative(-0.5 * s * s * pxx[k]));
    }
    p.table.push_back(std::move(row));
  }
  return p;
}

double interpolate_policy(const FeedbackPolicy& p, double t, double x) {
  const Grid1D& g = p.grid;
  const auto& ts = p.times;
  const double tc = std::clamp(t, ts.front(), ts.back());
  std::size_t i = 0;
  double wt = 0.0;
  if (ts.size() > 1) {
    auto it = std::upper_bound(ts.begin(), ts.end(), tc);
    i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
        0, std::min<std::ptrdiff_t>(it - ts.begin() - 1,
                                    static_cast<std::ptrdiff_t>(ts.size()) - 2)));
    const double span = ts[i + 1] - ts[i];
    wt = span > 0.0 ? (tc - ts[i]) / span : 0.0;
  }
  const double xc = std::clamp(x, -g.half_width(), g.half_width());
  const std::size_t k = g.cell_of(xc);
  const double wx = std::clamp((xc - g.x(k)) / g.spacing(), 0.0, 1.0);
  auto row_value = [&](std::size_t r) {
    const auto& row = p.table[r];
    return (1.0 - wx) * row[k] + wx * row[k + 1];
  };
  if (ts.size() == 1) return row_value(0);
  return (1.0 - wt) * row_value(i) + wt * row_value(i + 1);
}

bool in_inner_domain(const Grid1D& grid, double x) {
  return std::abs(x) <= kInnerFraction * grid.half_width() + 1e-12;
}

void write_policy_csv(std::ostream& os, const FeedbackPolicy& p) {
  os << "# units: t [time], x [state], u [control intensity]\n";
  os << "t,x,u\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    for (std::size_t k = 0; k < p.grid.size(); ++k) {
      os << p.times[i] << ',' << p.grid.x(k) << ',' << p.table[i][k] << '\n';
    }
  }
}

void write_policy_text(std::ostream& os, const FeedbackPolicy& p) {
  os << "mildhjb-policy 1\n";
  os << std::setprecision(17);
  os << "grid " << p.grid.half_width() << ' ' << p.grid.size() << '\n';
  os << "times " << p.times.size() << '\n';
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    os << p.times[i];
    for (double u : p.table[i]) os << ' ' << u;
    os << '\n';
  }
}

FeedbackPolicy read_policy_text(std::istream& is) {
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "mildhjb-policy" || version != 1) {
    throw IoError("not a mildhjb-policy v1 stream");
  }
  double half_width = 0.0;
  std::size_t nodes = 0, count = 0;
  if (!(is >> tag >> half_width >> nodes) || tag != "grid") {
    throw IoError("policy stream: malformed grid line");
  }
  if (!(is >> tag >> count) || tag != "times" || count == 0) {
    throw IoError("policy stream: malformed times line");
  }
  FeedbackPolicy p{Grid1D(half_width, nodes), {}, {}};
  for (std::size_t i = 0; i < count; ++i) {
    double t = 0.0;
    std::vector<double> row(nodes);
    if (!(is >> t)) throw IoError("policy stream truncated");
    for (double& u : row) {
      if (!(is >> u)) throw IoError("policy stream truncated");
    }
    p.times.push_back(t);
    p.table.push_back(std::move(row));
  }
  return p;
}

}  // namespace mildhjb
