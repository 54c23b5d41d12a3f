#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mildhjb/error.hpp"
#include "mildhjb/mc.hpp"

using namespace mildhjb;

namespace {

ScalarFunction gauss() {
  return {[](double x) { return std::exp(-x * x); },
          [](double x) { return -2.0 * x * std::exp(-x * x); },
          [](double x) { return (4.0 * x * x - 2.0) * std::exp(-x * x); },
          "exp(-x^2)"};
}

ProblemSpec desk() {
  ProblemSpec p;
  p.drift = {[](double x) { return std::tanh(x); },
             [](double x) { const double t = std::tanh(x); return 1.0 - t * t; },
             [](double x) { const double t = std::tanh(x); return -2.0 * t * (1.0 - t * t); },
             "tanh"};
  p.volatility = {[](double x) { return std::sqrt(2.0) + 0.1 * std::sin(x); },
                  [](double x) { return 0.1 * std::cos(x); },
                  [](double x) { return -0.1 * std::sin(x); }, "sigma"};
  p.running = gauss();
  p.terminal = gauss();
  p.horizon = 0.5;
  return p;
}

ProblemSpec brownian() {
  ProblemSpec p;
  p.drift = ScalarFunction::constant(0.0);
  p.volatility = ScalarFunction::constant(1.0);
  p.running = {[](double x) { return x * x; }, [](double x) { return 2.0 * x; },
               [](double) { return 2.0; }, "x^2"};
  p.terminal = ScalarFunction::constant(0.0);
  p.horizon = 1.0;
  return p;
}

// Discrete-time mean for Brownian with constant c: left sums of E X_k^2 = c k dt.
double brownian_mean(double c, double T, std::size_t n) {
  const double dt = T / static_cast<double>(n);
  return c * T * (T - dt) / 2.0 + c * c * T;
}

}  // namespace

TEST_CASE("u = 0 reduces to the deterministic ODE") {
  const ProblemSpec p = desk();
  SimConfig cfg;
  cfg.paths = 50;
  cfg.x0 = 0.5;
  cfg.dt = 1e-4;
  const McReport r = simulate_cost(p, constant_law(0.0), cfg);
  CHECK(r.stderr_ == 0.0);
  // sinh x(t) = sinh(x0) e^t; Simpson for the running cost.
  auto x_of = [](double t) { return std::asinh(std::sinh(0.5) * std::exp(t)); };
  const int m = 2000;
  double s = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double t = 0.5 * i / m;
    const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::exp(-x_of(t) * x_of(t));
  }
  const double exact = s * 0.5 / m / 3.0 + std::exp(-x_of(0.5) * x_of(0.5));
  CHECK(r.mean == doctest::Approx(exact).epsilon(1e-4));
  cfg.x0 = 0.0;
  CHECK(simulate_cost(p, constant_law(0.0), cfg).mean == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("Brownian motion with constant control: analytic mean") {
  const ProblemSpec p = brownian();
  SimConfig cfg;
  cfg.paths = 20000;
  cfg.dt = 1e-2;
  for (double c : {0.25, 1.0}) {
    const McReport r = simulate_cost(p, constant_law(c), cfg);
    CHECK(std::abs(r.mean - brownian_mean(c, 1.0, 100)) <= 4.0 * r.stderr_);
    CHECK(r.ci_half_width == doctest::Approx(1.96 * r.stderr_));
    CHECK(r.paths == 20000);
  }
}

TEST_CASE("confidence intervals cover the truth at the nominal rate") {
  const ProblemSpec p = brownian();
  SimConfig cfg;
  cfg.paths = 400;
  cfg.dt = 5e-2;
  const double truth = brownian_mean(1.0, 1.0, 20);
  int covered = 0;
  const int trials = 60;
  for (int s = 0; s < trials; ++s) {
    cfg.seed = 1000 + static_cast<std::uint64_t>(s);
    const McReport r = simulate_cost(p, constant_law(1.0), cfg);
    if (std::abs(r.mean - truth) <= r.ci_half_width) ++covered;
  }
  CHECK(covered >= 50);
}

TEST_CASE("reproducibility: seeds, threads, common random numbers") {
  const ProblemSpec p = desk();
  SimConfig cfg;
  cfg.paths = 2000;
  cfg.dt = 5e-3;
  cfg.keep_samples = true;
  cfg.threads = 1;
  const McReport a = simulate_cost(p, constant_law(0.5), cfg);
  cfg.threads = 4;
  const McReport b = simulate_cost(p, constant_law(0.5), cfg);
  CHECK(a.samples == b.samples);
  CHECK(a.mean == b.mean);
  CHECK(a.stderr_ == b.stderr_);
  cfg.seed = 2;
  const McReport c = simulate_cost(p, constant_law(0.5), cfg);
  CHECK(c.mean != a.mean);
  CHECK(path_seed(1, 0) != path_seed(1, 1));
  CHECK(path_seed(1, 0) != path_seed(2, 0));

  // A constant feedback table is the constant control, path by path.
  FeedbackPolicy flat{Grid1D(10.0, 21), {0.0, 0.5},
                      {std::vector<double>(21, 0.5), std::vector<double>(21, 0.5)}};
  cfg.seed = 1;
  const McReport d = simulate_cost(p, feedback_law(flat), cfg);
  CHECK(d.samples == a.samples);
}

TEST_CASE("policy comparison bookkeeping and CSV") {
  const ProblemSpec p = desk();
  SimConfig cfg;
  cfg.paths = 500;
  cfg.dt = 1e-2;
  cfg.baselines = {0.0, 0.5, 2.0};
  const PolicyComparison cmp = compare_policies(p, constant_law(0.5), cfg);
  REQUIRE(cmp.baselines.size() == 3);
  CHECK(cmp.best_baseline == 1);
  CHECK(cmp.feedback.mean == cmp.baselines[1].mean);
  CHECK(cmp.feedback_not_worse);
  CHECK_FALSE(cmp.ci_separated);
  std::ostringstream os;
  write_comparison_csv(os, cmp);
  const std::string s = os.str();
  CHECK(s.find("policy,mean,stderr,ci_low,ci_high,paths,excluded\n") != std::string::npos);
  CHECK(s.find("feedback,") != std::string::npos);
  CHECK(s.find("constant 2,") != std::string::npos);
  cfg.baselines.clear();
  CHECK_THROWS_AS(compare_policies(p, constant_law(0.5), cfg), ConfigError);
}

TEST_CASE("blow-ups and invalid configurations") {
  ProblemSpec p = desk();
  p.drift = {[](double x) { return x * x * x; }, [](double x) { return 3 * x * x; },
             [](double x) { return 6 * x; }, "x^3"};
  SimConfig cfg;
  cfg.paths = 100;
  cfg.x0 = 10.0;
  cfg.dt = 0.05;
  CHECK_THROWS_AS(simulate_cost(p, constant_law(0.0), cfg), SolverError);
  cfg.paths = 1;
  CHECK_THROWS_AS(simulate_cost(desk(), constant_law(0.0), cfg), ConfigError);
}

TEST_CASE("compensated summation") {
  KahanSum k;
  double naive = 1e16;
  k.add(1e16);
  for (int i = 0; i < 10; ++i) {
    k.add(1.0);
    naive += 1.0;
  }
  CHECK(k.value() == 1e16 + 10.0);
  CHECK(naive == 1e16);
}
