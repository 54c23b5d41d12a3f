#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>

namespace mildhjb {

/// Running control cost h(u), only ever evaluated on u >= 0.
///
/// Two kinds exist: the closed-form quadratic h(u) = a1 u^2 + a2, and a
/// user callable whose coercivity constants (a1, a2) are declared by the
/// caller and checked on a probe grid by validate().
class RunningCost {
 public:
  enum class Kind { quadratic, callable };

  static RunningCost quadratic(double alpha1, double alpha2);
  static RunningCost callable(std::function<double(double)> h, double alpha1,
                              double alpha2, std::string label = "h(u)");

  Kind kind() const { return kind_; }
  double alpha1() const { return alpha1_; }
  double alpha2() const { return alpha2_; }
  const std::string& label() const { return label_; }

  double operator()(double u) const;

  /// Midpoint convexity (tolerance 1e-9) and h(u) >= a1 u^2 + a2 on a probe
  /// grid over [0, probe_max].  Throws ConvexityError.
  void validate(double probe_max = 10.0, std::size_t probes = 401) const;

 private:
  RunningCost(Kind kind, double a1, double a2,
              std::function<double(double)> h, std::string label);

  Kind kind_;
  double alpha1_;
  double alpha2_;
  std::function<double(double)> h_;
  std::string label_;
};

/// One evaluation of sup_{u >= 0} (p u - h(u)).
struct ConjugateSample {
  double value;
  double maximizer;  // smallest maximizer
  bool unique;       // false when h is affine near the maximizer
};

/// Closed form for the quadratic kind; otherwise golden-section search on the
/// bracket [0, (|p| + |h(0)|)/a1 + 1] followed by a Newton polish.  Throws
/// ConvexityError when p u - h(u) is visibly not unimodal on the bracket.
ConjugateSample conjugate_sample(const RunningCost& cost, double p);

double conjugate(const RunningCost& cost, double p);
double conjugate_derivative(const RunningCost& cost, double p);
/// j(r) = integral_0^r H*(p) dp
double potential(const RunningCost& cost, double r);

/// H*, (H*)' and the potential j packaged for the solver.
///
/// The object is immutable and cheap to copy (shared backend).  Besides the
/// conjugate of a RunningCost it can wrap arbitrary test conjugates such as
/// H*(v) = v, which the linear oracles use.
class ConjugateHamiltonian {
 public:
  enum class Backend { closed_form, tabulated, custom };

  struct Model;

  static ConjugateHamiltonian closed_form(const RunningCost& cost);

  /// Uniform table on [p_min, p_max]: linear interpolation of (H*)' with
  /// constant extrapolation, Hermite interpolation of H*, and j as the exact
  /// antiderivative of the interpolated H*.
  static ConjugateHamiltonian tabulated(const RunningCost& cost, double p_min,
                                        double p_max,
                                        std::size_t nodes = 4097);

  /// Closed form when available, tabulated otherwise.
  static ConjugateHamiltonian from_cost(const RunningCost& cost, double p_min,
                                        double p_max);

  static ConjugateHamiltonian custom(
      std::string name, std::function<double(double)> value,
      std::function<double(double)> derivative,
      std::function<double(double)> potential,
      double derivative_lipschitz);

  /// H*(v) = v.  Turns the transformed equation into a linear one.
  static ConjugateHamiltonian linear_test();
  /// H* = 0.
  static ConjugateHamiltonian zero_test();

  double value(double p) const;
  double derivative(double p) const;
  double potential(double r) const;

  /// Lipschitz constant of (H*)', i.e. sup |(H*)''|.
  double derivative_lipschitz() const;
  /// Smallest C with (H*)'(p) <= C (|p| + 1), measured on the table or a
  /// probe grid.
  double growth_constant() const;
  bool in_table_range(double p) const;

  Backend backend() const;
  const std::string& name() const;

 private:
  explicit ConjugateHamiltonian(std::shared_ptr<const Model> model);
  std::shared_ptr<const Model> model_;
};

/// Symmetric table range [-p, p] suited to multipliers up to `max_multiplier`
/// and data up to `max_abs_y`.
std::pair<double, double> anticipated_conjugate_range(double max_multiplier,
                                                      double max_abs_y);

/// Smallest C2 with H*(v) v <= (C2 - 1) j(v) over the probe points where
/// j(v) > 0 (the energy-estimate scaling condition).
double measure_scaling_constant(const ConjugateHamiltonian& conj,
                                std::span<const double> probes);

}  // namespace mildhjb
