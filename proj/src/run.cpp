#include "mildhjb/run.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <ostream>
#include <sstream>
#include <type_traits>

#include "mildhjb/csv.hpp"
#include "mildhjb/degenerate.hpp"
#include "mildhjb/expression.hpp"
#include "mildhjb/hjb.hpp"
#include "mildhjb/mc.hpp"
#include "mildhjb/nd.hpp"
#include "mildhjb/stepper.hpp"

namespace mildhjb {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

class Session {
 public:
  Session(const RunConfig& config, fs::path dir, std::ostream& log, bool quiet)
      : config_(config), dir_(std::move(dir)), log_(log), quiet_(quiet) {}

  void write(const fs::path& relative,
             const std::function<void(std::ostream&)>& body) {
    write_file(dir_ / relative, body);
    artifacts_.push_back(relative);
  }

  template <class F>
  auto timed(const std::string& stage, F&& f) {
    const auto t0 = Clock::now();
    auto stop = [&] {
      const double s = std::chrono::duration<double>(Clock::now() - t0).count();
      timings_.emplace_back(stage, s);
      note(stage + " done in " + seconds(s));
    };
    if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
      f();
      stop();
    } else {
      auto result = f();
      stop();
      return result;
    }
  }

  void note(const std::string& line) {
    if (!quiet_) log_ << "[" << to_string(config_.mode) << "] " << line << '\n';
  }

  void summary(const std::string& key, const std::string& value) {
    summary_ << key << ": " << value << '\n';
  }
  void summary(const std::string& key, double value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    summary(key, os.str());
  }

  void finish() {
    write("reports/summary.txt", [&](std::ostream& os) {
      os << "mode: " << to_string(config_.mode) << '\n' << summary_.str();
    });
    const fs::path manifest = "manifest.txt";
    artifacts_.push_back(manifest);
    write_file(dir_ / manifest, [&](std::ostream& os) {
      os << "# mildhjb manifest\n";
      os << "# version: " << kVersion << '\n';
      os << "# compiler: " << __VERSION__ << '\n';
      os << "# eigen: " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
         << EIGEN_MINOR_VERSION << '\n';
      double total = 0.0;
      for (const auto& [stage, s] : timings_) {
        os << "# timing " << stage << ": " << seconds(s) << '\n';
        total += s;
      }
      os << "# timing total: " << seconds(total) << '\n';
      os << "# artifacts:\n";
      for (const auto& a : artifacts_) os << "#   " << a.generic_string() << '\n';
      os << "# re-run: hjbsolve " << to_string(config_.mode)
         << " --config manifest.txt\n";
      os << emit_config(config_);
    });
  }

  const std::vector<fs::path>& artifacts() const { return artifacts_; }

 private:
  static std::string seconds(double s) {
    std::ostringstream os;
    os.precision(3);
    os << std::fixed << s << " s";
    return os.str();
  }

  const RunConfig& config_;
  fs::path dir_;
  std::ostream& log_;
  bool quiet_;
  std::vector<std::pair<std::string, double>> timings_;
  std::vector<fs::path> artifacts_;
  std::ostringstream summary_;
};

ConjugateHamiltonian conjugate_for(const RunningCost& cost, double m_max,
                                   double y_max) {
  if (cost.kind() == RunningCost::Kind::quadratic) {
    return ConjugateHamiltonian::closed_form(cost);
  }
  cost.validate();
  const auto [lo, hi] = anticipated_conjugate_range(m_max, y_max);
  return ConjugateHamiltonian::tabulated(cost, lo, hi);
}

struct Setup1D {
  ProblemSpec spec;
  Grid1D grid;
  ConjugateHamiltonian conj;
  MildOptions options;
};

Setup1D setup_1d(const RunConfig& c) {
  ProblemSpec spec = make_problem(c);
  Grid1D grid(c.grid->L, c.grid->n);
  double m_max = 0.0, y_max = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double x = grid.x(k);
    const double s = spec.volatility(x);
    m_max = std::max(m_max, 0.5 * s * s);
    y_max = std::max(y_max, std::abs(spec.terminal.d2(x)) +
                                spec.horizon * std::abs(spec.running.d2(x)));
  }
  if (c.mode == Mode::sweep_degenerate) {
    m_max += 0.5 * c.degenerate->ladder.front();
  }
  ConjugateHamiltonian conj = conjugate_for(spec.cost, m_max, 2.0 * y_max);
  MildOptions options;
  options.resolvent.tol_res = c.solver->tol_res;
  options.resolvent.max_newton = c.solver->max_newton;
  options.snapshot_budget = c.solver->snapshot_budget;
  return {std::move(spec), grid, std::move(conj), options};
}

TransformedProblem transformed(const RunConfig& c, const Setup1D& s) {
  TransformedProblem p = TransformedProblem::build(s.spec, s.grid, s.conj);
  p.operands.with_perturbation = c.solver->include_B;
  return p;
}

void write_y_field(Session& session, const MildSolution& sol) {
  session.write("fields/y.csv", [&](std::ostream& os) {
    write_csv_header(os, {{"t", "time"}, {"x", "state"}, {"y", "-phi_xx"}});
    for (std::size_t i = 0; i < sol.snapshots.size(); ++i) {
      const Field& y = sol.snapshots[i];
      for (std::size_t k = 0; k < y.size(); ++k) {
        os << sol.times[i] << ',' << sol.grid.x(k) << ',' << y[k] << '\n';
      }
    }
  });
}

void write_step_reports(Session& session, const MildSolution& sol) {
  session.write("reports/steps.csv", [&](std::ostream& os) {
    write_csv_header(os, {{"step", "index"},
                          {"dt", "time"},
                          {"strategy", "label"},
                          {"newton_iterations", "count"},
                          {"picard_iterations", "count"},
                          {"residual", "L1 of y"},
                          {"tolerance", "L1 of y"},
                          {"out_of_range_nodes", "count"}});
    for (const StepRecord& r : sol.records) {
      const ResolventDiagnostics& d = r.resolvent;
      os << r.index << ',' << r.dt << ',' << to_string(d.strategy) << ','
         << d.newton_iterations << ',' << d.picard_iterations << ','
         << d.residual << ',' << d.tolerance << ',' << d.out_of_range_nodes << '\n';
    }
  });
  session.write("reports/energy.csv", [&](std::ostream& os) {
    write_csv_header(os, {{"state", "index"},
                          {"dt", "time"},
                          {"energy", "integral of j(m y)/(2m)"},
                          {"dissipation", "integral of ((H*(m y))_x)^2"}});
    for (std::size_t i = 0; i < sol.energy.size(); ++i) {
      os << i << ',' << sol.dts[i] << ',' << sol.energy[i] << ','
         << sol.dissipation[i] << '\n';
    }
  });
}

struct Solved {
  TransformedProblem problem;
  MildSolution solution;
};

Solved solve_stage(Session& session, const RunConfig& c, const Setup1D& s) {
  TransformedProblem problem = transformed(c, s);
  const SolverBlock& sv = *c.solver;
  MildSolution sol = session.timed("solve", [&] {
    if (sv.refine_tol > 0.0) {
      Refinement ref = refine_until(problem, sv.refine_tol, sv.eps,
                                    sv.max_halvings, s.options);
      session.write("reports/refinement.csv", [&](std::ostream& os) {
        write_csv_header(os, {{"eps", "time"}, {"gap_to_next", "L1 of y, sup in time"}});
        for (std::size_t i = 0; i < ref.eps_series.size(); ++i) {
          os << ref.eps_series[i] << ',';
          if (i < ref.gaps.size()) os << ref.gaps[i];
          else os << "nan";
          os << '\n';
        }
      });
      session.summary("refinement_converged", ref.converged ? "true" : "false");
      if (!ref.converged) {
        session.note("warning: refinement tolerance not reached after " +
                     std::to_string(sv.max_halvings) + " halvings");
      }
      return std::move(ref.finest);
    }
    return mild_solve(problem, sv.eps, s.options);
  });
  write_y_field(session, sol);
  write_step_reports(session, sol);
  const EnergyReport e = energy_report(sol);
  session.summary("eps", sol.eps);
  session.summary("steps", std::to_string(sol.steps));
  session.summary("partial_step_dt", sol.partial_dt);
  session.summary("snapshot_stride", std::to_string(sol.stride));
  session.summary("final_l1_norm", sol.final_state().l1_norm());
  session.summary("final_integral", sol.final_state().integral());
  session.summary("max_energy", e.max_energy);
  session.summary("cumulative_dissipation", e.cumulative_dissipation);
  session.note("eps " + std::to_string(sol.eps) + ", " +
               std::to_string(sol.records.size()) + " implicit steps");
  return {std::move(problem), std::move(sol)};
}

ValueFunction value_stage(Session& session, const MildSolution& sol) {
  ValueFunction v = session.timed("reconstruct", [&] { return reconstruct_value(sol); });
  session.write("fields/phi.csv", [&](std::ostream& os) {
    write_csv_header(os, {{"t", "time"},
                          {"x", "state"},
                          {"phi", "cost"},
                          {"phi_x", "cost/state"},
                          {"phi_xx", "cost/state^2"}});
    for (std::size_t i = 0; i < v.times.size(); ++i) {
      for (std::size_t k = 0; k < v.grid.size(); ++k) {
        if (!in_inner_domain(v.grid, v.grid.x(k))) continue;
        os << v.times[i] << ',' << v.grid.x(k) << ',' << v.phi[i][k] << ','
           << v.phi_x[i][k] << ',' << v.phi_xx[i][k] << '\n';
      }
    }
  });
  const std::size_t mid = v.grid.size() / 2;
  session.summary("phi_t0_x0", v.phi.front()[mid]);
  return v;
}

FeedbackPolicy policy_stage(Session& session, const ValueFunction& v,
                            const TransformedProblem& problem,
                            const ConjugateHamiltonian& conj) {
  FeedbackPolicy p = session.timed(
      "synthesize", [&] { return synthesize_feedback(v, problem.operands, conj); });
  session.write("policy.csv", [&](std::ostream& os) { write_policy_csv(os, p); });
  session.write("policy.txt", [&](std::ostream& os) { write_policy_text(os, p); });
  return p;
}

void simulate_stage(Session& session, const RunConfig& c, const Setup1D& s,
                    const ControlLaw& law, const std::string& label) {
  const SimulateBlock& b = *c.simulate;
  SimConfig sim;
  sim.paths = b.paths;
  sim.dt = b.dt;
  sim.seed = c.seed;
  sim.x0 = b.x0;
  sim.baselines = b.baselines;
  sim.keep_samples = b.dump_paths;
  sim.threads = b.threads;
  PolicyComparison cmp = session.timed("simulate", [&] {
    if (label == "feedback" && !sim.baselines.empty()) {
      return compare_policies(s.spec, law, sim);
    }
    PolicyComparison out;
    out.feedback = simulate_cost(s.spec, law, sim, label);
    for (double c0 : sim.baselines) {
      std::ostringstream name;
      name << "constant " << c0;
      out.baselines.push_back(simulate_cost(s.spec, constant_law(c0), sim, name.str()));
    }
    for (std::size_t i = 1; i < out.baselines.size(); ++i) {
      if (out.baselines[i].mean < out.baselines[out.best_baseline].mean) {
        out.best_baseline = i;
      }
    }
    if (!out.baselines.empty()) {
      const McReport& best = out.baselines[out.best_baseline];
      out.feedback_not_worse = out.feedback.mean <= best.mean;
      out.ci_separated = out.feedback.mean + out.feedback.ci_half_width <
                         best.mean - best.ci_half_width;
    }
    return out;
  });
  session.write("reports/mc_comparison.csv",
                [&](std::ostream& os) { write_comparison_csv(os, cmp); });
  if (b.dump_paths) {
    session.write("reports/mc_samples.csv",
                  [&](std::ostream& os) { write_samples_csv(os, cmp); });
  }
  session.summary("mc_policy", cmp.feedback.label);
  session.summary("mc_mean", cmp.feedback.mean);
  session.summary("mc_stderr", cmp.feedback.stderr_);
  session.summary("mc_excluded", std::to_string(cmp.feedback.excluded));
  if (!cmp.baselines.empty()) {
    const McReport& best = cmp.baselines[cmp.best_baseline];
    session.summary("best_baseline", best.label);
    session.summary("best_baseline_mean", best.mean);
    session.summary("best_baseline_stderr", best.stderr_);
    session.summary("policy_not_worse", cmp.feedback_not_worse ? "true" : "false");
  }
  session.note(cmp.feedback.label + " mean cost " + std::to_string(cmp.feedback.mean) +
               " +- " + std::to_string(cmp.feedback.ci_half_width));
}

void run_sweep_eps(Session& session, const RunConfig& c, const Setup1D& s) {
  TransformedProblem problem = transformed(c, s);
  std::vector<MildSolution> sols;
  for (double eps : c.sweep->eps) {
    sols.push_back(session.timed("solve eps=" + std::to_string(eps), [&] {
      return mild_solve(problem, eps, s.options);
    }));
  }
  session.write("reports/sweep_eps.csv", [&](std::ostream& os) {
    write_csv_header(os, {{"eps", "time"},
                          {"steps", "count"},
                          {"gap_to_previous", "L1 of y, sup in time"},
                          {"max_energy", "integral of j(m y)/(2m)"},
                          {"cumulative_dissipation", "time x integral of ((H*(m y))_x)^2"},
                          {"implied_constant", "energy"}});
    for (std::size_t i = 0; i < sols.size(); ++i) {
      const EnergyReport e = energy_report(sols[i]);
      const double gap = i == 0 ? 0.0 : sup_l1_gap(sols[i - 1], sols[i]);
      os << sols[i].eps << ',' << sols[i].steps << ',' << gap << ','
         << e.max_energy << ',' << e.cumulative_dissipation << ','
         << e.implied_constant << '\n';
    }
  });
  session.write("fields/y_final.csv", [&](std::ostream& os) {
    write_csv_header(os, {{"eps", "time"}, {"x", "state"}, {"y", "-phi_xx"}});
    for (const MildSolution& sol : sols) {
      const Field& y = sol.final_state();
      for (std::size_t k = 0; k < y.size(); ++k) {
        os << sol.eps << ',' << sol.grid.x(k) << ',' << y[k] << '\n';
      }
    }
  });
  session.summary("levels", std::to_string(sols.size()));
}

void run_sweep_degenerate(Session& session, const RunConfig& c, const Setup1D& s) {
  MildOptions options = s.options;
  DegenerateSweep sweep = session.timed("degenerate ladder", [&] {
    return solve_degenerate(s.spec, s.grid, s.conj, c.degenerate->ladder,
                            c.degenerate->eps, options);
  });
  session.write("reports/degenerate.csv",
                [&](std::ostream& os) { write_degenerate_csv(os, sweep); });
  session.write("fields/y_final.csv", [&](std::ostream& os) {
    write_csv_header(os, {{"eps_reg", "volatility^2"}, {"x", "state"}, {"y", "-phi_xx"}});
    for (const DegenerateLevel& level : sweep.levels) {
      const Field& y = level.solution.final_state();
      for (std::size_t k = 0; k < y.size(); ++k) {
        os << level.regularization << ',' << y.grid().x(k) << ',' << y[k] << '\n';
      }
    }
  });
  session.summary("gaps_decreasing", sweep.gaps_decreasing ? "true" : "false");
  session.summary("bounds_hold", sweep.bounds_hold ? "true" : "false");
  if (!sweep.gaps_decreasing) session.note("warning: gaps are not strictly decreasing");
  if (!sweep.bounds_hold) session.note("warning: L-infinity bound violated");
}

void run_solve_2d(Session& session, const RunConfig& c) {
  const NdBlock& b = *c.nd;
  const Grid2D grid(b.L, b.n);
  Eigen::MatrixXd factor(2, static_cast<Eigen::Index>(b.a[0].size()));
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < b.a[i].size(); ++j) {
      factor(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = b.a[i][j];
    }
  }
  const std::vector<std::string> xy{"x", "y"};
  const Expression sigma0 = Expression::parse(b.sigma0, xy);
  const Expression g = Expression::parse(b.g, xy);
  const Expression g0 = Expression::parse(b.g0, xy);
  const NdProblemSpec spec = NdProblemSpec::build(
      grid, factor, [&](double x, double y) { return sigma0(x, y); },
      [&](double x, double y) { return g(x, y); },
      [&](double x, double y) { return g0(x, y); }, b.T);
  if (!spec.comparison_valid) session.note("warning: " + spec.warning);
  const RunningCost cost = make_cost(*c.cost);
  double m_max = 0.0;
  for (double s0 : spec.sigma0.values()) m_max = std::max(m_max, 0.5 * s0 * s0);
  const double y_max = spec.initial.linf_norm() + b.T * spec.source.linf_norm();
  const ConjugateHamiltonian conj = conjugate_for(cost, m_max, 2.0 * y_max);

  MildSolution2D sol = session.timed(
      "solve-2d", [&] { return mild_solve_nd(spec, conj, b.eps, b.steps); });
  const Field2D phi = session.timed(
      "reconstruct", [&] { return reconstruct_value_nd(spec, sol.snapshots.back()); });
  session.write("fields/y2d_initial.csv", [&](std::ostream& os) {
    write_field2d_csv(os, sol.snapshots.front(), "y");
  });
  session.write("fields/y2d_final.csv", [&](std::ostream& os) {
    write_field2d_csv(os, sol.snapshots.back(), "y");
  });
  session.write("fields/phi2d_final.csv",
                [&](std::ostream& os) { write_field2d_csv(os, phi, "phi"); });
  session.write("reports/mass.csv", [&](std::ostream& os) {
    write_csv_header(os, {{"step", "index"},
                          {"t", "time"},
                          {"mass", "integral of y"},
                          {"newton_iterations", "count"}});
    for (std::size_t i = 0; i < sol.times.size(); ++i) {
      os << i << ',' << sol.times[i] << ',' << sol.mass[i] << ','
         << sol.newton_iterations[i] << '\n';
    }
  });
  session.summary("comparison_valid", spec.comparison_valid ? "true" : "false");
  session.summary("steps", std::to_string(sol.times.size() - 1));
  session.summary("initial_mass", sol.mass.front());
  session.summary("final_mass", sol.mass.back());
}

void run_conjugate_table(Session& session, const RunConfig& c) {
  const RunningCost cost = make_cost(*c.cost);
  if (cost.kind() == RunningCost::Kind::callable) cost.validate();
  const ConjugateTableBlock& b = *c.conjugate_table;
  session.timed("conjugate table", [&] {
    session.write("reports/conjugate_table.csv", [&](std::ostream& os) {
      write_csv_header(os, {{"p", "cost/control"},
                            {"Hstar", "cost"},
                            {"dHstar", "control"},
                            {"j", "cost x cost/control"}});
      for (std::size_t i = 0; i < b.nodes; ++i) {
        const double p =
            i + 1 == b.nodes
                ? b.p_max
                : b.p_min + (b.p_max - b.p_min) * static_cast<double>(i) /
                                static_cast<double>(b.nodes - 1);
        os << p << ',' << conjugate(cost, p) << ',' << conjugate_derivative(cost, p)
           << ',' << potential(cost, p) << '\n';
      }
    });
  });
  session.summary("cost", cost.label());
  session.summary("nodes", std::to_string(b.nodes));
}

void execute(Session& session, const RunConfig& c) {
  switch (c.mode) {
    case Mode::conjugate_table: run_conjugate_table(session, c); return;
    case Mode::solve_2d: run_solve_2d(session, c); return;
    default: break;
  }
  const Setup1D s = session.timed("setup", [&] { return setup_1d(c); });
  switch (c.mode) {
    case Mode::sweep_eps: run_sweep_eps(session, c, s); return;
    case Mode::sweep_degenerate: run_sweep_degenerate(session, c, s); return;
    case Mode::simulate:
      if (c.simulate->policy == "constant") {
        std::ostringstream label;
        label << "constant " << c.simulate->constant;
        simulate_stage(session, c, s, constant_law(c.simulate->constant), label.str());
        return;
      }
      break;
    default: break;
  }
  const Solved solved = solve_stage(session, c, s);
  if (c.mode == Mode::solve) return;
  const ValueFunction v = value_stage(session, solved.solution);
  if (c.mode == Mode::value) return;
  const FeedbackPolicy policy = policy_stage(session, v, solved.problem, s.conj);
  if (c.mode == Mode::policy) return;
  simulate_stage(session, c, s, feedback_law(policy), "feedback");
}

}  // namespace

int report_error(std::ostream& err, const std::exception& e) {
  int code = kExitInternal;
  const char* kind = "internal";
  if (dynamic_cast<const IoError*>(&e) != nullptr) {
    code = kExitIo;
    kind = "io";
  } else if (dynamic_cast<const SolverError*>(&e) != nullptr) {
    code = kExitSolver;
    kind = "solver";
  } else if (dynamic_cast<const ConvexityError*>(&e) != nullptr) {
    code = kExitConfig;
    kind = "convexity";
  } else if (dynamic_cast<const ConfigError*>(&e) != nullptr) {
    code = kExitConfig;
    kind = "config";
  }
  err << "error:\n  kind: " << kind << '\n';
  if (const auto* v = dynamic_cast<const ConfigValidationError*>(&e)) {
    err << "  issues:\n";
    for (const ConfigIssue& is : v->issues()) {
      err << "    - field: " << is.field << '\n';
      if (is.line > 0) {
        err << "      line: " << is.line << "\n      column: " << is.column << '\n';
      }
      err << "      message: " << is.message << '\n';
    }
  } else {
    err << "  message: " << e.what() << '\n';
  }
  if (const auto* s = dynamic_cast<const SolverError*>(&e)) {
    err << "  residual: " << s->residual() << '\n';
  }
  err << "  exit_code: " << code << '\n';
  return code;
}

RunOutcome run(const RunConfig& config, const RunOptions& options,
               std::ostream& log, std::ostream& err) {
  RunConfig c = config;
  if (!options.output.empty()) c.output = options.output.string();
  Session session(c, fs::path(c.output), log, options.quiet);
  RunOutcome outcome;
  try {
    execute(session, c);
    session.finish();
  } catch (const std::exception& e) {
    outcome.exit_code = report_error(err, e);
  }
  outcome.artifacts = session.artifacts();
  return outcome;
}

}  // namespace mildhjb
