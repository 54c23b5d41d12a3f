#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mildhjb/error.hpp"
#include "mildhjb/hjb.hpp"

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

const ConjugateHamiltonian kQuad =
    ConjugateHamiltonian::closed_form(RunningCost::quadratic(1.0, 0.0));

}  // namespace

TEST_CASE("zero state gives zero value and zero control") {
  ProblemSpec spec = desk();
  spec.running = ScalarFunction::constant(0.0);
  spec.terminal = ScalarFunction::constant(0.0);
  const Grid1D g(10.0, 101);
  const TransformedProblem p = TransformedProblem::build(spec, g, kQuad);
  const MildSolution sol = mild_solve(p, 1e-2, {});
  const ValueFunction v = reconstruct_value(sol);
  const FeedbackPolicy pol = synthesize_feedback(v, p.operands, kQuad);
  for (const Field& phi : v.phi) CHECK(phi.linf_norm() == 0.0);
  for (const auto& row : pol.table) {
    for (double u : row) CHECK(u == 0.0);
  }
}

TEST_CASE("value function structure on the desk problem") {
  const Grid1D g(10.0, 401);
  const TransformedProblem p = TransformedProblem::build(desk(), g, kQuad);
  const MildSolution sol = mild_solve(p, 1e-2, {});
  const ValueFunction v = reconstruct_value(sol);
  REQUIRE(v.times.size() == sol.snapshots.size());
  CHECK(v.times.front() == 0.0);
  CHECK(v.times.back() == doctest::Approx(0.5));
  for (std::size_t i = 1; i < v.times.size(); ++i) CHECK(v.times[i] > v.times[i - 1]);
  // phi(T) reproduces g0 (up to O(h^2) and the tiny boundary values).
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (in_inner_domain(g, g.x(k))) {
      err = std::max(err, std::abs(v.phi.back()[k] - std::exp(-g.x(k) * g.x(k))));
    }
  }
  CHECK(err <= 1e-3);
  for (std::size_t i = 0; i < v.phi.size(); ++i) {
    const Field d2 = diff2(v.phi[i]);
    for (std::size_t k = 1; k + 1 < g.size(); ++k) {
      CHECK(d2[k] == doctest::Approx(v.phi_xx[i][k]).epsilon(1e-8).scale(1.0));
    }
  }
  CHECK(in_inner_domain(g, 8.0));
  CHECK_FALSE(in_inner_domain(g, 8.1));
}

TEST_CASE("feedback is the pointwise argmin of the Hamiltonian") {
  const Grid1D g(10.0, 201);
  const TransformedProblem p = TransformedProblem::build(desk(), g, kQuad);
  const ValueFunction v = reconstruct_value(mild_solve(p, 1e-2, {}));
  const FeedbackPolicy pol = synthesize_feedback(v, p.operands, kQuad);
  for (std::size_t i = 0; i < pol.times.size(); i += 7) {
    for (std::size_t k = 0; k < g.size(); k += 5) {
      const double s = std::sqrt(2.0) + 0.1 * std::sin(g.x(k));
      const double q = 0.5 * s * s * v.phi_xx[i][k];
      // argmin_{u >= 0} u q + u^2 by a scan
      double best_u = 0.0, best = 0.0;
      for (int j = 0; j <= 200000; ++j) {
        const double u = 1e-5 * j;
        const double c = u * q + u * u;
        if (c < best) { best = c; best_u = u; }
      }
      CHECK(std::abs(pol.table[i][k] - best_u) <= 1e-5);
    }
  }
}

TEST_CASE("bilinear interpolation and clamping") {
  FeedbackPolicy p{Grid1D(2.0, 5), {0.0, 1.0},
                  {{0.0, 1.0, 2.0, 3.0, 4.0}, {2.0, 3.0, 4.0, 5.0, 6.0}}};
  CHECK(interpolate_policy(p, 0.0, 0.0) == doctest::Approx(2.0));
  CHECK(interpolate_policy(p, 0.5, 0.5) == doctest::Approx(3.5));
  CHECK(interpolate_policy(p, 0.25, -0.5) == doctest::Approx(2.0));
  CHECK(interpolate_policy(p, -3.0, 5.0) == doctest::Approx(4.0));
  CHECK(interpolate_policy(p, 9.0, -5.0) == doctest::Approx(2.0));
  CHECK(interpolate_policy(p, 1.0, 2.0) == doctest::Approx(6.0));
  FeedbackPolicy single{Grid1D(2.0, 5), {0.0}, {{1.0, 2.0, 5.0, 6.0, 7.0}}};
  CHECK(interpolate_policy(single, 0.7, 0.5) == doctest::Approx(5.5));
}

TEST_CASE("policy text and CSV round trip") {
  const Grid1D g(10.0, 101);
  const TransformedProblem p = TransformedProblem::build(desk(), g, kQuad);
  const FeedbackPolicy pol =
      synthesize_feedback(reconstruct_value(mild_solve(p, 5e-2, {})), p.operands, kQuad);
  std::stringstream ss;
  write_policy_text(ss, pol);
  const FeedbackPolicy back = read_policy_text(ss);
  CHECK(back.grid == pol.grid);
  CHECK(back.times == pol.times);
  CHECK(back.table == pol.table);
  std::stringstream bad("mildhjb-policy 2\n");
  CHECK_THROWS(read_policy_text(bad));
  std::ostringstream csv;
  write_policy_csv(csv, pol);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line.rfind("# units:", 0) == 0);
  std::getline(lines, line);
  CHECK(line == "t,x,u");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == pol.times.size() * g.size());
}
