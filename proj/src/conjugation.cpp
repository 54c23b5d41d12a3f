#include "mildhjb/conjugation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "mildhjb/error.hpp"

namespace mildhjb {

// ---------------------------------------------------------------------------
// RunningCost

RunningCost::RunningCost(Kind kind, double a1, double a2,
                         std::function<double(double)> h, std::string label)
    : kind_(kind), alpha1_(a1), alpha2_(a2), h_(std::move(h)),
      label_(std::move(label)) {
  if (!(a1 > 0.0) || !std::isfinite(a1)) {
    throw ConfigError("cost coercivity alpha1 must be positive");
  }
  if (!(a2 >= 0.0) || !std::isfinite(a2)) {
    throw ConfigError("cost offset alpha2 must be nonnegative");
  }
}

RunningCost RunningCost::quadratic(double alpha1, double alpha2) {
  std::ostringstream os;
  os << alpha1 << "*u^2 + " << alpha2;
  return RunningCost(Kind::quadratic, alpha1, alpha2, nullptr, os.str());
}

RunningCost RunningCost::callable(std::function<double(double)> h,
                                  double alpha1, double alpha2,
                                  std::string label) {
  if (!h) throw ConfigError("callable running cost needs a function");
  return RunningCost(Kind::callable, alpha1, alpha2, std::move(h),
                     std::move(label));
}

double RunningCost::operator()(double u) const {
  if (kind_ == Kind::quadratic) return alpha1_ * u * u + alpha2_;
  return h_(u);
}

void RunningCost::validate(double probe_max, std::size_t probes) const {
  if (kind_ == Kind::quadratic) return;
  const double du = probe_max / static_cast<double>(probes - 1);
  std::vector<double> hv(probes);
  for (std::size_t i = 0; i < probes; ++i) {
    const double u = du * static_cast<double>(i);
    hv[i] = (*this)(u);
    if (!std::isfinite(hv[i])) {
      throw ConvexityError("running cost is not finite at u = " +
                           std::to_string(u));
    }
    const double floor = alpha1_ * u * u + alpha2_;
    if (hv[i] < floor - 1e-9 * (1.0 + std::abs(floor))) {
      throw ConvexityError("running cost violates h(u) >= alpha1 u^2 + alpha2 "
                           "at u = " + std::to_string(u));
    }
  }
  for (std::size_t i = 1; i + 1 < probes; ++i) {
    const double mid = 0.5 * (hv[i - 1] + hv[i + 1]);
    if (hv[i] > mid + 1e-9 * (1.0 + std::abs(mid))) {
      throw ConvexityError("running cost fails midpoint convexity at u = " +
                           std::to_string(du * static_cast<double>(i)));
    }
  }
}

// ---------------------------------------------------------------------------
// Numeric conjugation

namespace {

constexpr double kInvPhi = 0.6180339887498948482;

ConjugateSample numeric_conjugate(const RunningCost& cost, double p) {
  const double h0 = cost(0.0);
  const double upper = (std::abs(p) + std::abs(h0)) / cost.alpha1() + 1.0;
  auto objective = [&](double u) { return p * u - cost(u); };

  // A concave objective sampled on a uniform grid rises and then falls.
  constexpr std::size_t kProbe = 65;
  std::vector<double> fv(kProbe);
  double scale = 1.0;
  for (std::size_t i = 0; i < kProbe; ++i) {
    fv[i] = objective(upper * static_cast<double>(i) / (kProbe - 1));
    scale = std::max(scale, std::abs(fv[i]));
  }
  const double tol = 1e-10 * scale;
  bool falling = false;
  for (std::size_t i = 1; i < kProbe; ++i) {
    if (fv[i] < fv[i - 1] - tol) falling = true;
    else if (falling && fv[i] > fv[i - 1] + tol) {
      throw ConvexityError("maximizer bracket for p = " + std::to_string(p) +
                           " is not unimodal; running cost is not convex");
    }
  }

  // Golden section; ties move the bracket left so that the smallest
  // maximizer wins.
  double a = 0.0, b = upper;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = objective(c), fd = objective(d);
  while (b - a > 1e-13 * (1.0 + upper)) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = objective(d);
    }
  }
  double u = 0.5 * (a + b);
  double fu = objective(u);
  if (objective(0.0) >= fu) {
    u = 0.0;
    fu = objective(0.0);
  }

  // Newton polish on p - h'(u) = 0 with difference quotients of h.
  for (int it = 0; it < 6 && u > 0.0; ++it) {
    const double step = 1e-4 * (1.0 + u);
    if (u <= step) break;
    const double hp = cost(u + step), hm = cost(u - step), hc = cost(u);
    const double d1 = (hp - hm) / (2.0 * step);
    const double d2 = (hp - 2.0 * hc + hm) / (step * step);
    if (!(d2 > 1e-12)) break;
    const double cand = std::clamp(u - (d1 - p) / d2, 0.0, upper);
    const double fcand = objective(cand);
    if (!(fcand > fu)) break;
    u = cand;
    fu = fcand;
  }

  const double probe = 1e-3 * (1.0 + u);
  const bool unique = fu - objective(u + probe) > 1e-12 * (1.0 + std::abs(fu));
  return {fu, u, unique};
}

// Adaptive Simpson.
double simpson_recurse(const std::function<double(double)>& fn, double a,
                       double b, double fa, double fm, double fb, double whole,
                       double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = fn(lm), frm = fn(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_recurse(fn, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(fn, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& fn, double a,
                        double b, double tol) {
  if (a == b) return 0.0;
  const double fa = fn(a), fb = fn(b), fm = fn(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_recurse(fn, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

ConjugateSample conjugate_sample(const RunningCost& cost, double p) {
  if (cost.kind() == RunningCost::Kind::quadratic) {
    const double u = std::max(p, 0.0) / (2.0 * cost.alpha1());
    return {p * u - cost(u), u, true};
  }
  return numeric_conjugate(cost, p);
}

double conjugate(const RunningCost& cost, double p) {
  return conjugate_sample(cost, p).value;
}

double conjugate_derivative(const RunningCost& cost, double p) {
  return conjugate_sample(cost, p).maximizer;
}

double potential(const RunningCost& cost, double r) {
  if (r == 0.0) return 0.0;
  if (cost.kind() == RunningCost::Kind::quadratic) {
    const double rp = std::max(r, 0.0);
    return rp * rp * rp / (12.0 * cost.alpha1()) - cost.alpha2() * r;
  }
  return adaptive_simpson([&](double p) { return conjugate(cost, p); }, 0.0, r,
                          1e-11);
}

// ---------------------------------------------------------------------------
// ConjugateHamiltonian backends

struct ConjugateHamiltonian::Model {
  virtual ~Model() = default;
  virtual double value(double p) const = 0;
  virtual double derivative(double p) const = 0;
  virtual double potential(double r) const = 0;
  virtual bool in_range(double) const { return true; }
  virtual Backend backend() const = 0;

  std::string name;
  double lipschitz = 0.0;
  double growth = 0.0;
};

namespace {

using Model = ConjugateHamiltonian::Model;
using Backend = ConjugateHamiltonian::Backend;

struct QuadraticModel final : Model {
  double a1, a2;
  QuadraticModel(double alpha1, double alpha2) : a1(alpha1), a2(alpha2) {}
  double value(double p) const override {
    const double q = std::max(p, 0.0);
    return q * q / (4.0 * a1) - a2;
  }
  double derivative(double p) const override {
    return std::max(p, 0.0) / (2.0 * a1);
  }
  double potential(double r) const override {
    const double q = std::max(r, 0.0);
    return q * q * q / (12.0 * a1) - a2 * r;
  }
  Backend backend() const override { return Backend::closed_form; }
};

struct FunctionModel final : Model {
  std::function<double(double)> v, d, j;
  double value(double p) const override { return v(p); }
  double derivative(double p) const override { return d(p); }
  double potential(double r) const override { return j(r); }
  Backend backend() const override { return Backend::custom; }
};

struct TableModel final : Model {
  double p0 = 0.0, dp = 1.0;
  std::vector<double> val, der, cum;
  double cum_at_zero = 0.0;

  std::size_t last() const { return val.size() - 1; }
  double p_at(std::size_t k) const { return p0 + dp * static_cast<double>(k); }

  // Integral of the Hermite interpolant over [p_k, p_k + s*dp].
  double cell_integral(std::size_t k, double s) const {
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
    return dp * ((s - s3 + 0.5 * s4) * val[k] +
                 (0.5 * s2 - 2.0 * s3 / 3.0 + 0.25 * s4) * dp * der[k] +
                 (s3 - 0.5 * s4) * val[k + 1] +
                 (-s3 / 3.0 + 0.25 * s4) * dp * der[k + 1]);
  }

  double cumulative(double p) const {
    if (p <= p0) {
      const double s = p - p0;
      return val[0] * s + 0.5 * der[0] * s * s;
    }
    const double pn = p_at(last());
    if (p >= pn) {
      const double s = p - pn;
      return cum[last()] + val[last()] * s + 0.5 * der[last()] * s * s;
    }
    const double t = (p - p0) / dp;
    const auto k = std::min(static_cast<std::size_t>(t), last() - 1);
    return cum[k] + cell_integral(k, t - static_cast<double>(k));
  }

  double value(double p) const override {
    if (p <= p0) return val[0] + der[0] * (p - p0);
    const double pn = p_at(last());
    if (p >= pn) return val[last()] + der[last()] * (p - pn);
    const double t = (p - p0) / dp;
    const auto k = std::min(static_cast<std::size_t>(t), last() - 1);
    const double s = t - static_cast<double>(k);
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * val[k] + (s3 - 2 * s2 + s) * dp * der[k] +
           (-2 * s3 + 3 * s2) * val[k + 1] + (s3 - s2) * dp * der[k + 1];
  }
  double derivative(double p) const override {
    if (p <= p0) return der[0];
    if (p >= p_at(last())) return der[last()];
    const double t = (p - p0) / dp;
    const auto k = std::min(static_cast<std::size_t>(t), last() - 1);
    const double s = t - static_cast<double>(k);
    return (1.0 - s) * der[k] + s * der[k + 1];
  }
  double potential(double r) const override {
    return cumulative(r) - cum_at_zero;
  }
  bool in_range(double p) const override {
    return p >= p0 && p <= p_at(last());
  }
  Backend backend() const override { return Backend::tabulated; }
};

double probe_growth(const Model& m) {
  double c = 0.0;
  for (int i = -2000; i <= 2000; ++i) {
    const double p = 0.05 * i;
    c = std::max(c, m.derivative(p) / (std::abs(p) + 1.0));
  }
  return c;
}

}  // namespace

ConjugateHamiltonian::ConjugateHamiltonian(std::shared_ptr<const Model> model)
    : model_(std::move(model)) {}

ConjugateHamiltonian ConjugateHamiltonian::closed_form(const RunningCost& cost) {
  if (cost.kind() != RunningCost::Kind::quadratic) {
    throw ConfigError("closed-form conjugate requires the quadratic cost");
  }
  auto m = std::make_shared<QuadraticModel>(cost.alpha1(), cost.alpha2());
  m->name = "closed-form quadratic (" + cost.label() + ")";
  m->lipschitz = 1.0 / (2.0 * cost.alpha1());
  m->growth = 1.0 / (2.0 * cost.alpha1());
  return ConjugateHamiltonian(std::move(m));
}

ConjugateHamiltonian ConjugateHamiltonian::tabulated(const RunningCost& cost,
                                                     double p_min,
                                                     double p_max,
                                                     std::size_t nodes) {
  if (!(p_max > p_min) || nodes < 3) {
    throw ConfigError("conjugate table needs p_min < p_max and >= 3 nodes");
  }
  auto m = std::make_shared<TableModel>();
  m->p0 = p_min;
  m->dp = (p_max - p_min) / static_cast<double>(nodes - 1);
  m->val.resize(nodes);
  m->der.resize(nodes);
  m->cum.assign(nodes, 0.0);
  for (std::size_t k = 0; k < nodes; ++k) {
    const ConjugateSample s = conjugate_sample(cost, m->p_at(k));
    m->val[k] = s.value;
    m->der[k] = s.maximizer;
  }
  for (std::size_t k = 0; k + 1 < nodes; ++k) {
    m->cum[k + 1] = m->cum[k] + m->cell_integral(k, 1.0);
    m->lipschitz =
        std::max(m->lipschitz, std::abs(m->der[k + 1] - m->der[k]) / m->dp);
  }
  for (std::size_t k = 0; k < nodes; ++k) {
    m->growth =
        std::max(m->growth, m->der[k] / (std::abs(m->p_at(k)) + 1.0));
  }
  m->cum_at_zero = m->cumulative(0.0);
  m->name = "tabulated (" + cost.label() + ")";
  return ConjugateHamiltonian(std::move(m));
}

ConjugateHamiltonian ConjugateHamiltonian::from_cost(const RunningCost& cost,
                                                     double p_min,
                                                     double p_max) {
  if (cost.kind() == RunningCost::Kind::quadratic) return closed_form(cost);
  return tabulated(cost, p_min, p_max);
}

ConjugateHamiltonian ConjugateHamiltonian::custom(
    std::string name, std::function<double(double)> value,
    std::function<double(double)> derivative,
    std::function<double(double)> potential, double derivative_lipschitz) {
  auto m = std::make_shared<FunctionModel>();
  m->v = std::move(value);
  m->d = std::move(derivative);
  m->j = std::move(potential);
  m->name = std::move(name);
  m->lipschitz = derivative_lipschitz;
  m->growth = probe_growth(*m);
  return ConjugateHamiltonian(std::move(m));
}

ConjugateHamiltonian ConjugateHamiltonian::linear_test() {
  return custom(
      "linear test H*(v)=v", [](double v) { return v; },
      [](double) { return 1.0; }, [](double r) { return 0.5 * r * r; }, 0.0);
}

ConjugateHamiltonian ConjugateHamiltonian::zero_test() {
  return custom(
      "zero test H*=0", [](double) { return 0.0; },
      [](double) { return 0.0; }, [](double) { return 0.0; }, 0.0);
}

double ConjugateHamiltonian::value(double p) const { return model_->value(p); }
double ConjugateHamiltonian::derivative(double p) const {
  return model_->derivative(p);
}
double ConjugateHamiltonian::potential(double r) const {
  return model_->potential(r);
}
double ConjugateHamiltonian::derivative_lipschitz() const {
  return model_->lipschitz;
}
double ConjugateHamiltonian::growth_constant() const { return model_->growth; }
bool ConjugateHamiltonian::in_table_range(double p) const {
  return model_->in_range(p);
}
ConjugateHamiltonian::Backend ConjugateHamiltonian::backend() const {
  return model_->backend();
}
const std::string& ConjugateHamiltonian::name() const { return model_->name; }

std::pair<double, double> anticipated_conjugate_range(double max_multiplier,
                                                      double max_abs_y) {
  const double p = std::max(1.0, 4.0 * max_multiplier * max_abs_y);
  return {-p, p};
}

double measure_scaling_constant(const ConjugateHamiltonian& conj,
                                std::span<const double> probes) {
  double c2 = 1.0;
  for (double v : probes) {
    const double j = conj.potential(v);
    if (!(j > 1e-14)) continue;
    c2 = std::max(c2, conj.value(v) * v / j + 1.0);
  }
  return c2;
}

}  // namespace mildhjb
