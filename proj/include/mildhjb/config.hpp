#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mildhjb/error.hpp"
#include "mildhjb/problem.hpp"

namespace mildhjb {

enum class Mode {
  solve,
  value,
  policy,
  simulate,
  sweep_eps,
  sweep_degenerate,
  solve_2d,
  conjugate_table,
};

std::string to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);
const std::vector<Mode>& all_modes();

struct ProblemBlock {
  std::string preset;  // empty, desk, brownian or degenerate
  std::string f = "0";
  std::string sigma = "1";
  std::string g = "0";
  std::string g0 = "0";
  double T = 0.5;
};

struct CostBlock {
  std::string kind = "quadratic";  // quadratic | expression
  double alpha1 = 1.0;
  double alpha2 = 0.0;
  std::string h;  // in the variable u, kind = expression only
};

struct GridBlock {
  double L = 10.0;
  std::size_t n = 201;
};

struct SolverBlock {
  double eps = 1e-2;
  double refine_tol = 0.0;  // > 0 halves eps until the sup-time L1 gap <= tol
  std::size_t max_halvings = 6;
  double tol_res = 0.0;
  int max_newton = 100;
  bool include_B = true;
  std::size_t snapshot_budget = 200000;
};

struct SimulateBlock {
  std::size_t paths = 10000;
  double dt = 0.0;
  double x0 = 0.0;
  std::vector<double> baselines{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  std::string policy = "feedback";  // feedback | constant
  double constant = 0.0;
  bool dump_paths = false;
  unsigned threads = 0;
};

struct SweepBlock {
  std::vector<double> eps{1e-2, 5e-3, 2.5e-3};
};

struct DegenerateBlock {
  std::vector<double> ladder{1e-1, 1e-2, 1e-3, 1e-4};
  double eps = 1e-2;
};

struct NdBlock {
  double L = 3.0;
  std::size_t n = 41;
  std::vector<std::vector<double>> a{{1.0, 0.0}, {0.0, 1.0}};
  std::string sigma0 = "1";
  std::string g = "0";
  std::string g0 = "exp(-x^2 - y^2)";
  double T = 0.1;
  double eps = 1e-2;
  std::size_t steps = 0;
};

struct ConjugateTableBlock {
  double p_min = -5.0;
  double p_max = 5.0;
  std::size_t nodes = 201;
};

struct RunConfig {
  Mode mode = Mode::solve;
  std::uint64_t seed = 1;
  std::string output = "out";
  std::optional<ProblemBlock> problem;
  std::optional<CostBlock> cost;
  std::optional<GridBlock> grid;
  std::optional<SolverBlock> solver;
  std::optional<SimulateBlock> simulate;
  std::optional<SweepBlock> sweep;
  std::optional<DegenerateBlock> degenerate;
  std::optional<NdBlock> nd;
  std::optional<ConjugateTableBlock> conjugate_table;
};

struct ConfigIssue {
  std::string field;  // dotted path, e.g. "grid.n"
  std::string message;
  int line = 0;       // 1-based; 0 when the field is absent
  int column = 0;
};

/// Every problem found in a config file.
class ConfigValidationError : public ConfigError {
 public:
  explicit ConfigValidationError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Parses and validates the whole file, reporting all issues at once.
/// `mode_override` (the CLI subcommand) takes precedence over a `mode` key.
RunConfig validate_config(std::string_view text,
                          std::optional<Mode> mode_override = std::nullopt);

RunConfig load_config(const std::filesystem::path& path,
                      std::optional<Mode> mode_override = std::nullopt);

/// Canonical text of a validated config; numbers carry 17 significant
/// digits so that validate_config(emit_config(c)) == c.
std::string emit_config(const RunConfig& config);

/// Expression-backed coefficient with analytic first and second derivatives.
/// When `need_derivatives` is false and the expression contains abs, the
/// derivative members throw ConfigError on use.
ScalarFunction make_function(const std::string& expression,
                             const std::string& label,
                             bool need_derivatives = true);

RunningCost make_cost(const CostBlock& block);

/// Problem block with its preset applied, as a ProblemSpec.
ProblemSpec make_problem(const RunConfig& config);

}  // namespace mildhjb
