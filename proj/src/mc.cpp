#include "mildhjb/mc.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "mildhjb/error.hpp"

namespace mildhjb {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
  return splitmix64(splitmix64(seed) ^ splitmix64(path + 0x632be59bd9b4e019ULL));
}

ControlLaw feedback_law(const FeedbackPolicy& policy) {
  return [&policy](double t, double x) {
    return interpolate_policy(policy, t, x);
  };
}

ControlLaw constant_law(double c) {
  return [c](double, double) { return c; };
}

McReport simulate_cost(const ProblemSpec& problem, const ControlLaw& control,
                       const SimConfig& cfg, std::string label) {
  if (cfg.paths < 2) throw ConfigError("simulation needs at least 2 paths");
  const double T = problem.horizon;
  const double dt0 = cfg.dt > 0.0 ? cfg.dt : T / 1000.0;
  if (!(dt0 > 0.0)) throw ConfigError("simulation time step must be positive");
  const auto n_steps = static_cast<std::size_t>(std::max(1.0, std::round(T / dt0)));
  const double dt = T / static_cast<double>(n_steps);
  const double sqdt = std::sqrt(dt);

  std::vector<double> cost(cfg.paths);
  std::vector<char> bad(cfg.paths, 0);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      std::mt19937_64 rng(path_seed(cfg.seed, p));
      std::normal_distribution<double> normal;
      double x = cfg.x0;
      double acc = 0.0;
      for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double u = std::max(0.0, control(t, x));
        acc += (problem.running(x) + problem.cost(u)) * dt;
        const double xi = normal(rng);
        x += problem.drift(x) * dt +
             std::sqrt(u) * problem.volatility(x) * sqdt * xi;
      }
      acc += problem.terminal(x);
      cost[p] = acc;
      bad[p] = std::isfinite(acc) && std::isfinite(x) ? 0 : 1;
    }
  };

  unsigned threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1u, 64u);
  if (threads == 1 || cfg.paths < 256) {
    run_range(0, cfg.paths);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (cfg.paths + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t b = std::min(cfg.paths, w * chunk);
      const std::size_t e = std::min(cfg.paths, b + chunk);
      if (b < e) pool.emplace_back(run_range, b, e);
    }
  }

  // Serial reduction in path order: identical for any thread count.
  McReport rep;
  rep.label = std::move(label);
  KahanSum sum, sum_sq;
  for (std::size_t p = 0; p < cfg.paths; ++p) {
    if (bad[p]) {
      ++rep.excluded;
      continue;
    }
    sum.add(cost[p]);
  }
  rep.paths = cfg.paths - rep.excluded;
  if (rep.excluded * 100 > cfg.paths) {
    throw SolverError("simulation of '" + rep.label + "': " +
                          std::to_string(rep.excluded) + " of " +
                          std::to_string(cfg.paths) +
                          " paths blew up (more than 1%)",
                      static_cast<double>(rep.excluded));
  }
  if (rep.paths < 2) throw SolverError("fewer than two finite paths", 0.0);
  rep.mean = sum.value() / static_cast<double>(rep.paths);
  for (std::size_t p = 0; p < cfg.paths; ++p) {
    if (!bad[p]) sum_sq.add((cost[p] - rep.mean) * (cost[p] - rep.mean));
  }
  const double var = sum_sq.value() / static_cast<double>(rep.paths - 1);
  rep.stderr_ = std::sqrt(var / static_cast<double>(rep.paths));
  rep.ci_half_width = 1.96 * rep.stderr_;
  if (cfg.keep_samples) rep.samples = std::move(cost);
  return rep;
}

PolicyComparison compare_policies(const ProblemSpec& problem,
                                  const ControlLaw& feedback,
                                  const SimConfig& cfg) {
  if (cfg.baselines.empty()) throw ConfigError("baseline control grid is empty");
  PolicyComparison cmp;
  cmp.feedback = simulate_cost(problem, feedback, cfg, "feedback");
  for (double c : cfg.baselines) {
    std::ostringstream name;
    name << "constant " << c;
    cmp.baselines.push_back(
        simulate_cost(problem, constant_law(c), cfg, name.str()));
  }
  for (std::size_t i = 1; i < cmp.baselines.size(); ++i) {
    if (cmp.baselines[i].mean < cmp.baselines[cmp.best_baseline].mean) {
      cmp.best_baseline = i;
    }
  }
  const McReport& best = cmp.baselines[cmp.best_baseline];
  cmp.feedback_not_worse = cmp.feedback.mean <= best.mean;
  cmp.ci_separated = cmp.feedback.mean + cmp.feedback.ci_half_width <
                     best.mean - best.ci_half_width;
  return cmp;
}

void write_comparison_csv(std::ostream& os, const PolicyComparison& cmp) {
  os << "# units: cost [objective], paths [count]\n";
  os << "policy,mean,stderr,ci_low,ci_high,paths,excluded\n";
  os << std::setprecision(17);
  auto row = [&](const McReport& r) {
    os << r.label << ',' << r.mean << ',' << r.stderr_ << ','
       << r.mean - r.ci_half_width << ',' << r.mean + r.ci_half_width << ','
       << r.paths << ',' << r.excluded << '\n';
  };
  row(cmp.feedback);
  for (const auto& b : cmp.baselines) row(b);
}

void write_samples_csv(std::ostream& os, const PolicyComparison& cmp) {
  os << "# units: path [index], cost [objective]\n";
  os << "path,policy,cost\n";
  os << std::setprecision(17);
  auto dump = [&](const McReport& r) {
    for (std::size_t p = 0; p < r.samples.size(); ++p) {
      os << p << ',' << r.label << ',' << r.samples[p] << '\n';
    }
  };
  dump(cmp.feedback);
  for (const auto& b : cmp.baselines) dump(b);
}

}  // namespace mildhjb
