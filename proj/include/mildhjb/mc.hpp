#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mildhjb/hjb.hpp"
#include "mildhjb/problem.hpp"

namespace mildhjb {

struct SimConfig {
  std::size_t paths = 10000;
  double dt = 0.0;  // 0 selects T / 1000
  std::uint64_t seed = 1;
  double x0 = 0.0;
  std::vector<double> baselines;
  bool keep_samples = false;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// u(t, x); negative values are clamped to zero by the simulator.
using ControlLaw = std::function<double(double, double)>;

ControlLaw feedback_law(const FeedbackPolicy& policy);
ControlLaw constant_law(double c);

struct McReport {
  std::string label;
  double mean = 0.0;
  double stderr_ = 0.0;
  double ci_half_width = 0.0;  // 1.96 * stderr
  std::size_t paths = 0;
  std::size_t excluded = 0;
  std::vector<double> samples;  // per-path costs when requested
};

/// Euler-Maruyama estimate of E[ sum (g(X_k) + h(u_k)) dt + g0(X_N) ].
///
/// Path p draws its normals from a generator seeded by (seed, p) only, so a
/// report is reproducible bit for bit and different policies see common
/// random numbers.  Non-finite paths are excluded; more than 1% excluded
/// throws SolverError.
McReport simulate_cost(const ProblemSpec& problem, const ControlLaw& control,
                       const SimConfig& cfg, std::string label = "policy");

struct PolicyComparison {
  McReport feedback;
  std::vector<McReport> baselines;
  std::size_t best_baseline = 0;
  /// feedback mean <= best baseline mean
  bool feedback_not_worse = false;
  /// feedback CI upper end below the best baseline CI lower end
  bool ci_separated = false;
};

PolicyComparison compare_policies(const ProblemSpec& problem,
                                  const ControlLaw& feedback,
                                  const SimConfig& cfg);

/// CSV: policy, mean, stderr, ci_low, ci_high, paths, excluded.
void write_comparison_csv(std::ostream& os, const PolicyComparison& cmp);
void write_samples_csv(std::ostream& os, const PolicyComparison& cmp);

/// Compensated summation.
class KahanSum {
 public:
  void add(double v) {
    const double y = v - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0, c_ = 0.0;
};

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path);

}  // namespace mildhjb
