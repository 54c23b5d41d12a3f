// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mildhjb/degenerate.hpp"
#include "mildhjb/hjb.hpp"
#include "mildhjb/mc.hpp"
#include "mildhjb/nd.hpp"
#include "mildhjb/resolvent.hpp"
#include "mildhjb/stepper.hpp"
#include "oracles.hpp"

using namespace mildhjb;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

ScalarFunction tanh_fn() {
  return {[](double x) { return std::tanh(x); },
          [](double x) { const double t = std::tanh(x); return 1.0 - t * t; },
          [](double x) { const double t = std::tanh(x); return -2.0 * t * (1.0 - t * t); },
          "tanh(x)"};
}

ScalarFunction gauss() {
  return {[](double x) { return std::exp(-x * x); },
          [](double x) { return -2.0 * x * std::exp(-x * x); },
          [](double x) { return (4.0 * x * x - 2.0) * std::exp(-x * x); },
          "exp(-x^2)"};
}

ScalarFunction desk_sigma() {
  return {[](double x) { return std::sqrt(2.0) + 0.1 * std::sin(x); },
          [](double x) { return 0.1 * std::cos(x); },
          [](double x) { return -0.1 * std::sin(x); }, "sqrt(2)+0.1*sin(x)"};
}

ProblemSpec desk() {
  ProblemSpec p;
  p.drift = tanh_fn();
  p.volatility = desk_sigma();
  p.running = gauss();
  p.terminal = gauss();
  p.horizon = 0.5;
  return p;
}

const ConjugateHamiltonian& quad() {
  static const ConjugateHamiltonian c =
      ConjugateHamiltonian::closed_form(RunningCost::quadratic(1.0, 0.0));
  return c;
}

Field random_field(const Grid1D& g, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Field f(g);
  for (std::size_t k = 1; k + 1 < g.size(); ++k) f[k] = u(rng);
  return f;
}

// Desk ladder shared by criteria 3 and 4.
const std::vector<MildSolution>& desk_ladder() {
  static const std::vector<MildSolution> sols = [] {
    const Grid1D g(10.0, 201);
    const TransformedProblem p = TransformedProblem::build(desk(), g, quad());
    std::vector<MildSolution> out;
    for (double eps : {1e-2, 5e-3, 2.5e-3}) out.push_back(mild_solve(p, eps));
    return out;
  }();
  return sols;
}

Verdict contraction() {
  const Grid1D g(10.0, 201);
  const EllipticOperands ops = EllipticOperands::build(
      quad(), DriftData(g, tanh_fn()), Field::from_function(g, desk_sigma().value));
  const double l0 = ops.drift.lambda0();
  ResolventConfig cfg;
  cfg.lambda = 2.0 * l0 + 1.0;
  std::mt19937_64 rng(101);
  double worst = 0.0, slack = 1e300;
  for (int t = 0; t < 50; ++t) {
    const Field a = random_field(g, rng, 2.0), b = random_field(g, rng, 2.0);
    const ResolventResult ya = solve_resolvent(ops, cfg, a);
    const ResolventResult yb = solve_resolvent(ops, cfg, b);
    const double tol = std::max(ya.diagnostics.tolerance, yb.diagnostics.tolerance);
    const double ratio = l1_distance(ya.y, yb.y) / l1_distance(a, b);
    const double bound = (1.0 + 1e-6) / (cfg.lambda - l0) + 10.0 * tol;
    worst = std::max(worst, ratio);
    slack = std::min(slack, bound - ratio);
  }
  return {slack >= 0.0,
          fmt("50 pairs with B, lambda=%.3g: max ratio %.6f vs (lambda-lambda0)^-1 = %.6f",
              cfg.lambda, worst, 1.0 / (cfg.lambda - l0))};
}

Verdict heat_oracle() {
  const double T = 0.25;
  std::vector<double> errs;
  const double eps[] = {4e-3, 2e-3, 1e-3};
  const std::size_t nodes[] = {201, 401, 801};
  for (int lv = 0; lv < 3; ++lv) {
    const Grid1D g(10.0, nodes[lv]);
    EllipticOperands ops = EllipticOperands::build(
        ConjugateHamiltonian::linear_test(), DriftData::zero(g),
        Field::from_function(g, [](double) { return std::sqrt(2.0); }));
    ops.with_perturbation = false;
    Field y0 = Field::from_function(g, [](double x) { return std::exp(-x * x); });
    y0[0] = y0[g.size() - 1] = 0.0;
    const TransformedProblem p{std::move(ops), std::move(y0), Field(g), T};
    const MildSolution sol = mild_solve(p, eps[lv]);
    const Field exact = Field::from_function(g, [T](double x) {
      const double s = 1.0 + 4.0 * T;
      return std::exp(-x * x / s) / std::sqrt(s);
    });
    errs.push_back(l1_distance(sol.final_state(), exact));
  }
  const bool pass = errs[1] < errs[0] && errs[2] < errs[1] && errs[2] <= errs[0] / 2.0;
  return {pass, fmt("L1 errors %.3e, %.3e, %.3e", errs[0], errs[1], errs[2])};
}

Verdict cauchy() {
  const auto& s = desk_ladder();
  const double g1 = sup_l1_gap(s[0], s[1]);
  const double g2 = sup_l1_gap(s[1], s[2]);
  return {g2 < g1, fmt("sup-time L1 gaps %.4e (1e-2 vs 5e-3), %.4e (5e-3 vs 2.5e-3), ratio %.3f",
                       g1, g2, g2 / g1)};
}

Verdict energy() {
  double emin = 1e300, emax = 0.0, dmin = 1e300, dmax = 0.0;
  bool finite = true;
  for (const MildSolution& s : desk_ladder()) {
    const EnergyReport r = energy_report(s);
    finite = finite && r.finite;
    emin = std::min(emin, r.max_energy);
    emax = std::max(emax, r.max_energy);
    dmin = std::min(dmin, r.cumulative_dissipation);
    dmax = std::max(dmax, r.cumulative_dissipation);
  }
  const double espread = (emax - emin) / emin, dspread = (dmax - dmin) / dmin;
  return {finite && espread <= 0.2 && dspread <= 0.2 && emin > 0.0 && dmin > 0.0,
          fmt("max energy spread %.2f%%, cumulative dissipation spread %.2f%% (max E %.4e)",
              100.0 * espread, 100.0 * dspread, emax)};
}

Verdict brute_force() {
  const Grid1D g(4.0, 9);
  const EllipticOperands ops = EllipticOperands::build(
      quad(), DriftData(g, tanh_fn()), Field::from_function(g, desk_sigma().value));
  oracle::ResolventProblem p;
  const ScalarFunction f = tanh_fn();
  p.f = f.value;
  p.df = f.d1;
  p.d2f = f.d2;
  p.sigma = desk_sigma().value;
  p.hstar = [](double v) { const double q = std::max(v, 0.0); return q * q / 4.0; };
  p.lambda = 2.0 * ops.drift.lambda0() + 1.0;
  ResolventConfig cfg;
  cfg.lambda = p.lambda;
  std::mt19937_64 rng(55);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Field eta = random_field(g, rng, 3.0);
    const Field y = solve_resolvent(ops, cfg, eta).y;
    const std::vector<double> ref = oracle::brute_force_resolvent(
        p, std::vector<double>(eta.values().begin(), eta.values().end()));
    for (std::size_t k = 0; k < g.size(); ++k) worst = std::max(worst, std::abs(ref[k] - y[k]));
  }
  return {worst <= 1e-9, fmt("20 right-hand sides, max nodal gap %.2e", worst)};
}

Verdict argmin() {
  const Grid1D g(10.0, 201);
  const TransformedProblem p = TransformedProblem::build(desk(), g, quad());
  const ValueFunction v = reconstruct_value(mild_solve(p, 1e-2));
  const FeedbackPolicy pol = synthesize_feedback(v, p.operands, quad());
  std::mt19937_64 rng(66);
  std::uniform_int_distribution<std::size_t> ti(0, pol.times.size() - 1), xi(1, g.size() - 2);
  double worst = -1e300;
  for (int s = 0; s < 200; ++s) {
    const std::size_t i = ti(rng), k = xi(rng);
    const double sig = p.operands.volatility[k];
    const double q = 0.5 * sig * sig * v.phi_xx[i][k];
    auto objective = [q](double u) { return q * u + u * u; };
    const double ustar = pol.table[i][k];
    const double umax = std::max(1.0, 2.0 * ustar);
    double best = 1e300;
    for (int j = 0; j < 10000; ++j) best = std::min(best, objective(umax * j / 9999.0));
    worst = std::max(worst, objective(ustar) - best);
  }
  return {worst <= 1e-8, fmt("200 samples, max excess of u* over probe minimum %.2e", worst)};
}

Verdict mc_analytic() {
  ProblemSpec p;
  p.drift = ScalarFunction::constant(0.0);
  p.volatility = ScalarFunction::constant(1.0);
  p.running = {[](double x) { return x * x; }, [](double x) { return 2.0 * x; },
               [](double) { return 2.0; }, "x^2"};
  p.terminal = ScalarFunction::constant(0.0);
  p.horizon = 1.0;
  SimConfig cfg;
  cfg.paths = 10000;
  cfg.seed = 7;
  const double c = 1.0;
  const McReport a = simulate_cost(p, constant_law(c), cfg);
  const McReport b = simulate_cost(p, constant_law(c), cfg);
  const double exact = c * p.horizon * p.horizon / 2.0 + c * c * p.horizon;
  const double z = std::abs(a.mean - exact) / a.stderr_;
  return {z <= 3.0 && a.mean == b.mean && a.stderr_ == b.stderr_,
          fmt("mean %.5f vs %.5f, |z| = %.2f, repeat identical", a.mean, exact, z)};
}

Verdict feedback_vs_constants() {
  const ProblemSpec spec = desk();
  const Grid1D g(10.0, 201);
  const TransformedProblem p = TransformedProblem::build(spec, g, quad());
  const FeedbackPolicy pol =
      synthesize_feedback(reconstruct_value(mild_solve(p, 1e-2)), p.operands, quad());
  SimConfig cfg;
  cfg.paths = 10000;
  cfg.seed = 8;
  cfg.x0 = 0.0;
  cfg.baselines = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  const PolicyComparison cmp = compare_policies(spec, feedback_law(pol), cfg);
  const McReport& best = cmp.baselines[cmp.best_baseline];
  return {cmp.feedback.mean <= best.mean + 2.0 * best.stderr_,
          fmt("feedback %.4f +- %.4f vs best constant %.4f", cmp.feedback.mean,
              cmp.feedback.stderr_, best.mean) +
              " (" + best.label + ")"};
}

Verdict degenerate_ladder() {
  ProblemSpec spec = desk();
  spec.volatility = {[](double x) { return x * std::exp(-x * x); },
                     [](double x) { return (1.0 - 2.0 * x * x) * std::exp(-x * x); },
                     [](double x) { return (4.0 * x * x * x - 6.0 * x) * std::exp(-x * x); },
                     "x*exp(-x^2)"};
  const DegenerateSweep s = solve_degenerate(spec, Grid1D(10.0, 201), quad(), kDefaultLadder, 1e-2);
  std::ostringstream gaps;
  for (std::size_t i = 1; i < s.levels.size(); ++i) {
    gaps << (i > 1 ? ", " : "") << fmt("%.3e", s.levels[i].gap_to_previous);
  }
  return {s.gaps_decreasing && s.bounds_hold,
          "gaps " + gaps.str() + (s.bounds_hold ? "; L-inf bound holds at every step"
                                                : "; L-inf bound violated")};
}

Verdict two_d() {
  const Grid2D g(3.0, 41);
  auto one = [](double, double) { return 1.0; };
  auto zero = [](double, double) { return 0.0; };
  auto bump = [](double x, double y) { return std::exp(-4.0 * (x * x + y * y)); };

  // Contraction with an axis-aligned anisotropic b.
  Eigen::MatrixXd diag_a(2, 2);
  diag_a << 1.2, 0.0, 0.0, 0.8;
  const NdProblemSpec axis = NdProblemSpec::build(g, diag_a, one, zero, bump, 0.5);
  const double lambda = 10.0;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rnd = [&] {
    Field2D f(g);
    for (std::size_t j = 1; j + 1 < g.nodes(); ++j)
      for (std::size_t i = 1; i + 1 < g.nodes(); ++i) f(i, j) = u(rng);
    return f;
  };
  double worst = 0.0;
  bool contraction = true;
  for (int t = 0; t < 20; ++t) {
    const Field2D a = rnd(), b = rnd();
    const NdResolventResult ya = solve_resolvent_nd(axis, quad(), lambda, a);
    const NdResolventResult yb = solve_resolvent_nd(axis, quad(), lambda, b);
    const double ratio = l1_distance(ya.y, yb.y) / l1_distance(a, b);
    const double tol = 10.0 * std::max(ya.residual, yb.residual) / l1_distance(a, b);
    worst = std::max(worst, ratio * lambda);
    if (ratio > (1.0 + 1e-6) / lambda + tol) contraction = false;
  }

  // Mass over 50 steps with g1 = 0 and a cross term.
  Eigen::MatrixXd cross_a(2, 2);
  cross_a << 1.0, 0.3, 0.0, 1.0;
  const NdProblemSpec cross = NdProblemSpec::build(g, cross_a, one, zero, bump, 0.5);
  const MildSolution2D sol = mild_solve_nd(cross, quad(), 1e-2, 50);
  double drift = 0.0;
  const double m0 = sol.mass.front();
  double scale = 0.0;
  for (double v : sol.snapshots.front().values()) scale += std::abs(v);
  scale *= g.spacing() * g.spacing();
  for (double m : sol.mass) drift = std::max(drift, std::abs(m - m0) / scale);

  // Cross-term stencil on z = x y.
  const Field2D xy = Field2D::from_function(g, [](double x, double y) { return x * y; });
  const Field2D lxy = apply_L(cross.diffusion, xy);
  double stencil = 0.0;
  for (std::size_t j = 1; j + 1 < g.nodes(); ++j)
    for (std::size_t i = 1; i + 1 < g.nodes(); ++i)
      stencil = std::max(stencil, std::abs(lxy(i, j) - 2.0 * cross.diffusion(0, 1)));

  return {contraction && drift <= 1e-8 && stencil <= 1e-10 && sol.snapshots.size() == 51,
          fmt("max lambda*ratio %.8f, relative mass drift %.2e, L(xy) error %.1e", worst,
              drift, stencil)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "resolvent L1 contraction", contraction},
      {2, "heat-equation oracle", heat_oracle},
      {3, "mild-limit Cauchy certificate", cauchy},
      {4, "energy estimate", energy},
      {5, "brute-force small instance", brute_force},
      {6, "feedback argmin certificate", argmin},
      {7, "Monte Carlo analytic case", mc_analytic},
      {8, "feedback beats constants", feedback_vs_constants},
      {9, "degenerate ladder", degenerate_ladder},
      {10, "2-D drift-free", two_d},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name,
                v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
