#include <doctest.h>

#include <cmath>

#include "mildhjb/expression.hpp"

using namespace mildhjb;

namespace {

// Five-point finite differences as the independent oracle.
double fd1(const Expression& e, double x, double h = 1e-3) {
  return (-e(x + 2 * h) + 8 * e(x + h) - 8 * e(x - h) + e(x - 2 * h)) / (12 * h);
}
double fd2(const Expression& e, double x, double h = 1e-3) {
  return (-e(x + 2 * h) + 16 * e(x + h) - 30 * e(x) + 16 * e(x - h) - e(x - 2 * h)) /
         (12 * h * h);
}

const double kProbes[] = {-2.1, -0.7, 0.0, 0.45, 1.9};

}  // namespace

TEST_CASE("evaluation, precedence, constants") {
  CHECK(Expression::parse("1 + 2 * 3")(0.0) == 7.0);
  CHECK(Expression::parse("2 ^ 3 ^ 2")(0.0) == 512.0);
  CHECK(Expression::parse("-x^2")(3.0) == -9.0);
  CHECK(Expression::parse("(1 - x) / 4")(3.0) == -0.5);
  CHECK(Expression::parse("2*pi")(0.0) == doctest::Approx(2.0 * M_PI));
  CHECK(Expression::parse("log(e)")(0.0) == doctest::Approx(1.0));
  CHECK(Expression::parse("sqrt(2)+0.1*sin(x)")(1.0) ==
        doctest::Approx(std::sqrt(2.0) + 0.1 * std::sin(1.0)));
  CHECK(Expression::parse("1.5e-1 * x")(2.0) == doctest::Approx(0.3));
  CHECK(Expression::parse(".5")(0.0) == 0.5);
  CHECK(Expression::parse("abs(x - 3)")(1.0) == 2.0);
  CHECK(Expression::parse("exp(-x^2 - y^2)", {"x", "y"})(1.0, 2.0) == doctest::Approx(std::exp(-5.0)));
}

TEST_CASE("tanh'' is -2 tanh (1 - tanh^2)") {
  const Expression f = Expression::parse("tanh(x)");
  const Expression d2 = f.derivative().derivative();
  for (double x : kProbes) {
    const double t = std::tanh(x);
    CHECK(d2(x) == doctest::Approx(-2.0 * t * (1.0 - t * t)).epsilon(1e-12));
    CHECK(d2(x) == doctest::Approx(fd2(f, x)).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("exp(-x^2)'' is (4x^2 - 2) exp(-x^2)") {
  const Expression g = Expression::parse("exp(-x^2)");
  const Expression d2 = g.derivative().derivative();
  for (double x : kProbes) {
    CHECK(d2(x) == doctest::Approx((4 * x * x - 2) * std::exp(-x * x)).epsilon(1e-12));
    CHECK(d2(x) == doctest::Approx(fd2(g, x)).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("derivatives of every function against finite differences") {
  for (const char* text :
       {"sqrt(2)+0.1*sin(x)", "x*exp(-x^2)", "cos(3*x)/(2+x^2)", "log(1+x^2)",
        "sqrt(1+x^2)", "x^3 - 2*x + 1", "(1+x^2)^0.5", "2^x", "x^x + 4"}) {
    const Expression e = Expression::parse(text);
    const Expression d1 = e.derivative();
    const Expression d2 = d1.derivative();
    for (double x : {0.3, 0.8, 1.7, 2.2, 0.55}) {
      INFO(text << " at " << x);
      CHECK(d1(x) == doctest::Approx(fd1(e, x)).epsilon(1e-7).scale(1.0));
      CHECK(d2(x) == doctest::Approx(fd2(e, x)).epsilon(1e-5).scale(1.0));
    }
  }
  const Expression two = Expression::parse("x^2 * y + sin(y)", {"x", "y"});
  CHECK(two.derivative(0)(1.5, 2.0) == doctest::Approx(6.0));
  CHECK(two.derivative(1)(1.5, 2.0) == doctest::Approx(2.25 + std::cos(2.0)));
  CHECK(Expression::parse("7").derivative()(1.0) == 0.0);
}

TEST_CASE("parse errors carry a column") {
  auto column_of = [](const char* text) -> std::size_t {
    try {
      (void)Expression::parse(text);
    } catch (const ParseError& e) {
      return e.column();
    }
    return 0;
  };
  CHECK(column_of("1 + * 2") == 5);
  CHECK(column_of("foo(x)") == 1);
  CHECK(column_of("x + z") == 5);
  CHECK(column_of("sin(x") == 6);
  CHECK(column_of("2 ^") == 4);
  CHECK(column_of("") == 1);
  CHECK(column_of("1..2") > 0);
  CHECK(column_of("x)") == 2);
  CHECK_THROWS_AS(Expression::parse("y", {"x"}), ParseError);
}

TEST_CASE("abs is flagged when a derivative is needed") {
  const Expression e = Expression::parse("abs(x) + x");
  CHECK_FALSE(e.differentiable());
  CHECK_THROWS_AS(e.derivative(), NonDifferentiableError);
  CHECK(Expression::parse("tanh(x)").differentiable());
}

TEST_CASE("printing round-trips") {
  for (const char* text : {"tanh(x)", "exp(-x^2)", "sqrt(2)+0.1*sin(x)", "-x^2", "2^3^2", "(1-x)/(2*x)"}) {
    const Expression a = Expression::parse(text);
    const Expression b = Expression::parse(a.to_string());
    for (double x : kProbes) {
      if (!std::isfinite(a(x))) continue;
      CHECK(b(x) == doctest::Approx(a(x)).epsilon(1e-15));
    }
  }
}
