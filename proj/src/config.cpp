#include "mildhjb/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

#include "mildhjb/expression.hpp"

namespace mildhjb {

namespace {

struct ModeName {
  Mode mode;
  const char* name;
};

constexpr ModeName kModes[] = {
    {Mode::solve, "solve"},
    {Mode::value, "value"},
    {Mode::policy, "policy"},
    {Mode::simulate, "simulate"},
    {Mode::sweep_eps, "sweep-eps"},
    {Mode::sweep_degenerate, "sweep-degenerate"},
    {Mode::solve_2d, "solve-2d"},
    {Mode::conjugate_table, "conjugate-table"},
};

struct Preset {
  const char* name;
  const char* f;
  const char* sigma;
  const char* g;
  const char* g0;
  double T;
};

constexpr Preset kPresets[] = {
    {"desk", "tanh(x)", "sqrt(2) + 0.1*sin(x)", "exp(-x^2)", "exp(-x^2)", 0.5},
    {"brownian", "0", "1", "x^2", "0", 1.0},
    {"degenerate", "tanh(x)", "x*exp(-x^2)", "exp(-x^2)", "exp(-x^2)", 0.5},
};

bool uses_1d_solver(Mode m) {
  return m == Mode::solve || m == Mode::value || m == Mode::policy ||
         m == Mode::simulate || m == Mode::sweep_eps ||
         m == Mode::sweep_degenerate;
}

/// Collects issues while walking the YAML tree.
class Reader {
 public:
  explicit Reader(std::vector<ConfigIssue>& issues) : issues_(issues) {}

  void issue(const std::string& field, const std::string& message,
             const YAML::Node* node = nullptr, int column_offset = 0) {
    ConfigIssue is{field, message, 0, 0};
    if (node != nullptr && node->IsDefined()) {
      const YAML::Mark mark = node->Mark();
      if (mark.line >= 0) {
        is.line = mark.line + 1;
        is.column = mark.column + 1 + column_offset;
      }
    }
    issues_.push_back(std::move(is));
  }

  bool expect_map(const YAML::Node& node, const std::string& field) {
    if (node.IsMap()) return true;
    issue(field, "expected a block of key: value entries", &node);
    return false;
  }

  void check_keys(const YAML::Node& node, const std::string& prefix,
                  std::initializer_list<const char*> allowed) {
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>("");
      const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                  [&](const char* a) { return key == a; });
      if (!ok) issue(join(prefix, key), "unknown key", &kv.first);
    }
  }

  static std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
  }

  std::optional<double> number(const YAML::Node& node, const std::string& field) {
    static const std::regex kNumber(R"([+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)");
    if (!node.IsScalar()) {
      issue(field, "expected a number", &node);
      return std::nullopt;
    }
    const std::string s = node.Scalar();
    if (!std::regex_match(s, kNumber)) {
      issue(field, "expected a decimal number, got '" + s + "'", &node);
      return std::nullopt;
    }
    double v = 0.0;
    const char* begin = s.data() + (s.front() == '+' ? 1 : 0);
    const auto res = std::from_chars(begin, s.data() + s.size(), v);
    if (res.ec != std::errc() || !std::isfinite(v)) {
      issue(field, "number out of range: '" + s + "'", &node);
      return std::nullopt;
    }
    return v;
  }

  std::optional<std::uint64_t> integer(const YAML::Node& node,
                                       const std::string& field) {
    static const std::regex kInteger(R"(\+?\d+)");
    if (!node.IsScalar() || !std::regex_match(node.Scalar(), kInteger)) {
      issue(field, "expected a non-negative integer", &node);
      return std::nullopt;
    }
    const std::string s = node.Scalar();
    std::uint64_t v = 0;
    const char* begin = s.data() + (s.front() == '+' ? 1 : 0);
    const auto res = std::from_chars(begin, s.data() + s.size(), v);
    if (res.ec != std::errc()) {
      issue(field, "integer out of range: '" + s + "'", &node);
      return std::nullopt;
    }
    return v;
  }

  void read(const YAML::Node& map, const std::string& prefix, const char* key,
            double& out, bool (*ok)(double) = nullptr,
            const char* range = nullptr) {
    const YAML::Node node = map[key];
    if (!node) return;
    const std::string field = join(prefix, key);
    if (auto v = number(node, field)) {
      if (ok != nullptr && !ok(*v)) {
        issue(field, std::string("out of range; expected ") + range, &node);
      } else {
        out = *v;
      }
    }
  }

  template <class Int>
  void read_int(const YAML::Node& map, const std::string& prefix,
                const char* key, Int& out, std::uint64_t min = 0,
                std::uint64_t max = std::numeric_limits<std::uint32_t>::max()) {
    const YAML::Node node = map[key];
    if (!node) return;
    const std::string field = join(prefix, key);
    if (auto v = integer(node, field)) {
      if (*v < min || *v > max) {
        issue(field, "out of range; expected an integer in [" +
                         std::to_string(min) + ", " + std::to_string(max) + "]",
              &node);
      } else {
        out = static_cast<Int>(*v);
      }
    }
  }

  void read_bool(const YAML::Node& map, const std::string& prefix,
                 const char* key, bool& out) {
    const YAML::Node node = map[key];
    if (!node) return;
    if (node.IsScalar() && (node.Scalar() == "true" || node.Scalar() == "false")) {
      out = node.Scalar() == "true";
    } else {
      issue(join(prefix, key), "expected true or false", &node);
    }
  }

  void read_string(const YAML::Node& map, const std::string& prefix,
                   const char* key, std::string& out,
                   std::initializer_list<const char*> choices = {}) {
    const YAML::Node node = map[key];
    if (!node) return;
    const std::string field = join(prefix, key);
    if (!node.IsScalar()) {
      issue(field, "expected a string", &node);
      return;
    }
    const std::string s = node.Scalar();
    if (choices.size() > 0 &&
        std::none_of(choices.begin(), choices.end(),
                     [&](const char* c) { return s == c; })) {
      std::string list;
      for (const char* c : choices) list += (list.empty() ? "" : ", ") + std::string(c);
      issue(field, "expected one of {" + list + "}, got '" + s + "'", &node);
      return;
    }
    out = s;
  }

  void read_list(const YAML::Node& map, const std::string& prefix,
                 const char* key, std::vector<double>& out) {
    const YAML::Node node = map[key];
    if (!node) return;
    const std::string field = join(prefix, key);
    if (!node.IsSequence()) {
      issue(field, "expected a list of numbers", &node);
      return;
    }
    std::vector<double> values;
    bool good = true;
    for (std::size_t i = 0; i < node.size(); ++i) {
      if (auto v = number(node[i], field + "[" + std::to_string(i) + "]")) {
        values.push_back(*v);
      } else {
        good = false;
      }
    }
    if (good) out = std::move(values);
  }

  /// Parses the expression; with `derivatives` also requires the first two
  /// derivatives to exist.
  void read_expression(const YAML::Node& map, const std::string& prefix,
                       const char* key, std::string& out,
                       const std::vector<std::string>& vars, bool derivatives,
                       const char* derivative_use = "") {
    const YAML::Node node = map[key];
    if (!node) return;
    const std::string field = join(prefix, key);
    if (!node.IsScalar()) {
      issue(field, "expected an expression string", &node);
      return;
    }
    const std::string text = node.Scalar();
    const int quote = node.Tag() == "!" ? 1 : 0;
    try {
      const Expression e = Expression::parse(text, vars);
      if (derivatives && !e.differentiable()) {
        issue(field,
              std::string("abs(...) is not differentiable but ") +
                  derivative_use + " is required",
              &node);
        return;
      }
    } catch (const ParseError& err) {
      issue(field, err.what(), &node,
            static_cast<int>(err.column()) - 1 + quote);
      return;
    }
    out = text;
  }

 private:
  std::vector<ConfigIssue>& issues_;
};

bool positive(double v) { return v > 0.0; }
bool non_negative(double v) { return v >= 0.0; }

bool strictly_decreasing_positive(const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) return false;
    if (i > 0 && !(v[i] < v[i - 1])) return false;
  }
  return true;
}

void check_odd_nodes(Reader& r, const YAML::Node& map, const std::string& field,
                     std::size_t n) {
  if (map["n"] && (n < 5 || n % 2 == 0)) {
    const YAML::Node node = map["n"];
    r.issue(field, "expected an odd node count >= 5", &node);
  }
}

ProblemBlock read_problem(Reader& r, const YAML::Node& node, Mode mode) {
  ProblemBlock b;
  if (!r.expect_map(node, "problem")) return b;
  r.check_keys(node, "problem", {"preset", "f", "sigma", "g", "g0", "T"});
  r.read_string(node, "problem", "preset", b.preset,
                {"desk", "brownian", "degenerate"});
  for (const Preset& p : kPresets) {
    if (b.preset == p.name) {
      b.f = p.f;
      b.sigma = p.sigma;
      b.g = p.g;
      b.g0 = p.g0;
      b.T = p.T;
    }
  }
  const std::vector<std::string> x{"x"};
  r.read_expression(node, "problem", "f", b.f, x, true, "f' and f''");
  r.read_expression(node, "problem", "sigma", b.sigma, x,
                    mode == Mode::sweep_degenerate, "sigma' and sigma''");
  r.read_expression(node, "problem", "g", b.g, x, true, "g''");
  r.read_expression(node, "problem", "g0", b.g0, x, true, "g0''");
  r.read(node, "problem", "T", b.T, positive, "T > 0");
  return b;
}

CostBlock read_cost(Reader& r, const YAML::Node& node) {
  CostBlock b;
  if (!r.expect_map(node, "cost")) return b;
  r.check_keys(node, "cost", {"kind", "alpha1", "alpha2", "h"});
  r.read_string(node, "cost", "kind", b.kind, {"quadratic", "expression"});
  r.read(node, "cost", "alpha1", b.alpha1, positive, "alpha1 > 0");
  r.read(node, "cost", "alpha2", b.alpha2);
  r.read_expression(node, "cost", "h", b.h, {"u"}, false);
  if (b.kind == "expression" && !node["h"]) {
    r.issue("cost.h", "required when cost.kind is expression", &node);
  }
  if (b.kind == "quadratic" && node["h"]) {
    const YAML::Node h = node["h"];
    r.issue("cost.h", "only allowed when cost.kind is expression", &h);
  }
  return b;
}

GridBlock read_grid(Reader& r, const YAML::Node& node) {
  GridBlock b;
  if (!r.expect_map(node, "grid")) return b;
  r.check_keys(node, "grid", {"L", "n"});
  r.read(node, "grid", "L", b.L, positive, "L > 0");
  r.read_int(node, "grid", "n", b.n, 0, 1000001);
  check_odd_nodes(r, node, "grid.n", b.n);
  return b;
}

SolverBlock read_solver(Reader& r, const YAML::Node& node) {
  SolverBlock b;
  if (!r.expect_map(node, "solver")) return b;
  r.check_keys(node, "solver", {"eps", "refine_tol", "max_halvings", "tol_res",
                                "max_newton", "include_B", "snapshot_budget"});
  r.read(node, "solver", "eps", b.eps, positive, "eps > 0");
  r.read(node, "solver", "refine_tol", b.refine_tol, non_negative, "refine_tol >= 0");
  r.read_int(node, "solver", "max_halvings", b.max_halvings, 1, 20);
  r.read(node, "solver", "tol_res", b.tol_res, non_negative, "tol_res >= 0");
  r.read_int(node, "solver", "max_newton", b.max_newton, 1, 100000);
  r.read_bool(node, "solver", "include_B", b.include_B);
  r.read_int(node, "solver", "snapshot_budget", b.snapshot_budget, 2,
             std::numeric_limits<std::uint32_t>::max());
  return b;
}

SimulateBlock read_simulate(Reader& r, const YAML::Node& node) {
  SimulateBlock b;
  if (!r.expect_map(node, "simulate")) return b;
  r.check_keys(node, "simulate", {"paths", "dt", "x0", "baselines", "policy",
                                  "constant", "dump_paths", "threads"});
  r.read_int(node, "simulate", "paths", b.paths, 2, 100000000);
  r.read(node, "simulate", "dt", b.dt, non_negative, "dt >= 0 (0 selects T/1000)");
  r.read(node, "simulate", "x0", b.x0);
  r.read_list(node, "simulate", "baselines", b.baselines);
  if (std::any_of(b.baselines.begin(), b.baselines.end(),
                  [](double c) { return c < 0.0; })) {
    const YAML::Node n = node["baselines"];
    r.issue("simulate.baselines", "constant controls must be >= 0", &n);
  }
  r.read_string(node, "simulate", "policy", b.policy, {"feedback", "constant"});
  r.read(node, "simulate", "constant", b.constant, non_negative, "constant >= 0");
  r.read_bool(node, "simulate", "dump_paths", b.dump_paths);
  r.read_int(node, "simulate", "threads", b.threads, 0, 1024);
  return b;
}

SweepBlock read_sweep(Reader& r, const YAML::Node& node) {
  SweepBlock b;
  if (!r.expect_map(node, "sweep")) return b;
  r.check_keys(node, "sweep", {"eps"});
  r.read_list(node, "sweep", "eps", b.eps);
  if (b.eps.size() < 2 || !strictly_decreasing_positive(b.eps)) {
    const YAML::Node n = node["eps"];
    r.issue("sweep.eps", "expected at least two positive, strictly decreasing values", &n);
  }
  return b;
}

DegenerateBlock read_degenerate(Reader& r, const YAML::Node& node) {
  DegenerateBlock b;
  if (!r.expect_map(node, "degenerate")) return b;
  r.check_keys(node, "degenerate", {"ladder", "eps"});
  r.read_list(node, "degenerate", "ladder", b.ladder);
  if (b.ladder.size() < 2 || !strictly_decreasing_positive(b.ladder)) {
    const YAML::Node n = node["ladder"];
    r.issue("degenerate.ladder",
            "expected at least two positive, strictly decreasing values", &n);
  }
  r.read(node, "degenerate", "eps", b.eps, positive, "eps > 0");
  return b;
}

NdBlock read_nd(Reader& r, const YAML::Node& node) {
  NdBlock b;
  if (!r.expect_map(node, "nd")) return b;
  r.check_keys(node, "nd", {"L", "n", "a", "sigma0", "g", "g0", "T", "eps", "steps"});
  r.read(node, "nd", "L", b.L, positive, "L > 0");
  r.read_int(node, "nd", "n", b.n, 0, 4001);
  check_odd_nodes(r, node, "nd.n", b.n);
  if (const YAML::Node a = node["a"]) {
    bool good = a.IsSequence() && a.size() == 2;
    std::vector<std::vector<double>> rows;
    if (good) {
      for (std::size_t i = 0; i < 2; ++i) {
        std::vector<double> row;
        YAML::Node holder;
        holder["row"] = a[i];
        r.read_list(holder, "nd", "row", row);
        if (row.empty()) good = false;
        rows.push_back(row);
      }
      if (good && rows[0].size() != rows[1].size()) good = false;
    }
    if (good) {
      b.a = rows;
    } else {
      r.issue("nd.a", "expected two rows of equal, non-zero length", &a);
    }
  }
  const std::vector<std::string> xy{"x", "y"};
  r.read_expression(node, "nd", "sigma0", b.sigma0, xy, false);
  r.read_expression(node, "nd", "g", b.g, xy, false);
  r.read_expression(node, "nd", "g0", b.g0, xy, false);
  r.read(node, "nd", "T", b.T, positive, "T > 0");
  r.read(node, "nd", "eps", b.eps, positive, "eps > 0");
  r.read_int(node, "nd", "steps", b.steps, 0, 1000000);
  return b;
}

ConjugateTableBlock read_conjugate_table(Reader& r, const YAML::Node& node) {
  ConjugateTableBlock b;
  if (!r.expect_map(node, "conjugate_table")) return b;
  r.check_keys(node, "conjugate_table", {"p_min", "p_max", "nodes"});
  r.read(node, "conjugate_table", "p_min", b.p_min);
  r.read(node, "conjugate_table", "p_max", b.p_max);
  r.read_int(node, "conjugate_table", "nodes", b.nodes, 2, 10000000);
  if (!(b.p_min < b.p_max)) {
    r.issue("conjugate_table.p_max", "expected p_min < p_max", &node);
  }
  return b;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

}  // namespace

std::string to_string(Mode mode) {
  for (const auto& m : kModes) {
    if (m.mode == mode) return m.name;
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view text) {
  for (const auto& m : kModes) {
    if (text == m.name) return m.mode;
  }
  return std::nullopt;
}

const std::vector<Mode>& all_modes() {
  static const std::vector<Mode> modes = [] {
    std::vector<Mode> v;
    for (const auto& m : kModes) v.push_back(m.mode);
    return v;
  }();
  return modes;
}

ConfigValidationError::ConfigValidationError(std::vector<ConfigIssue> issues)
    : ConfigError([&] {
        std::string msg = std::to_string(issues.size()) + " configuration error(s)";
        for (const auto& is : issues) {
          msg += "\n  " + is.field;
          if (is.line > 0) {
            msg += " (line " + std::to_string(is.line) + ", column " +
                   std::to_string(is.column) + ")";
          }
          msg += ": " + is.message;
        }
        return msg;
      }()),
      issues_(std::move(issues)) {}

RunConfig validate_config(std::string_view text, std::optional<Mode> mode_override) {
  std::vector<ConfigIssue> issues;
  Reader r(issues);
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    issues.push_back({"<file>", e.msg, e.mark.line + 1, e.mark.column + 1});
    throw ConfigValidationError(std::move(issues));
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) {
    r.issue("<file>", "expected a block of key: value entries", &root);
    throw ConfigValidationError(std::move(issues));
  }
  r.check_keys(root, "", {"mode", "seed", "output", "problem", "cost", "grid",
                          "solver", "simulate", "sweep", "degenerate", "nd",
                          "conjugate_table"});

  RunConfig c;
  std::optional<Mode> mode = mode_override;
  if (const YAML::Node m = root["mode"]; m && !mode) {
    std::string name;
    r.read_string(root, "", "mode", name);
    mode = parse_mode(name);
    if (!mode && !name.empty()) {
      std::string list;
      for (const auto& e : kModes) list += (list.empty() ? "" : ", ") + std::string(e.name);
      r.issue("mode", "expected one of {" + list + "}, got '" + name + "'", &m);
    }
  } else if (!mode) {
    r.issue("mode", "no mode given (subcommand or mode key)");
  }
  c.mode = mode.value_or(Mode::solve);

  if (root["seed"]) {
    if (auto v = r.integer(root["seed"], "seed")) c.seed = *v;
  }
  r.read_string(root, "", "output", c.output);

  auto block = [&](const char* key, bool required, auto reader, auto& slot) {
    const YAML::Node node = root[key];
    if (node) {
      slot = reader(node);
    } else if (required && mode) {
      r.issue(key, "block required for mode " + to_string(*mode));
    }
  };
  const Mode md = c.mode;
  const bool one_d = uses_1d_solver(md);
  block("problem", one_d, [&](const YAML::Node& n) { return read_problem(r, n, md); },
        c.problem);
  block("cost", true, [&](const YAML::Node& n) { return read_cost(r, n); }, c.cost);
  block("grid", one_d, [&](const YAML::Node& n) { return read_grid(r, n); }, c.grid);
  block("solver", one_d, [&](const YAML::Node& n) { return read_solver(r, n); },
        c.solver);
  block("simulate", md == Mode::simulate,
        [&](const YAML::Node& n) { return read_simulate(r, n); }, c.simulate);
  block("sweep", md == Mode::sweep_eps,
        [&](const YAML::Node& n) { return read_sweep(r, n); }, c.sweep);
  block("degenerate", md == Mode::sweep_degenerate,
        [&](const YAML::Node& n) { return read_degenerate(r, n); }, c.degenerate);
  block("nd", md == Mode::solve_2d, [&](const YAML::Node& n) { return read_nd(r, n); },
        c.nd);
  block("conjugate_table", md == Mode::conjugate_table,
        [&](const YAML::Node& n) { return read_conjugate_table(r, n); },
        c.conjugate_table);

  if (!issues.empty()) throw ConfigValidationError(std::move(issues));
  return c;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<Mode> mode_override) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return validate_config(ss.str(), mode_override);
}

std::string emit_config(const RunConfig& c) {
  std::ostringstream os;
  os << "mode: " << to_string(c.mode) << '\n';
  os << "seed: " << c.seed << '\n';
  os << "output: " << quoted(c.output) << '\n';
  if (c.problem) {
    const auto& p = *c.problem;
    os << "problem:\n";
    if (!p.preset.empty()) os << "  preset: " << p.preset << '\n';
    os << "  f: " << quoted(p.f) << '\n';
    os << "  sigma: " << quoted(p.sigma) << '\n';
    os << "  g: " << quoted(p.g) << '\n';
    os << "  g0: " << quoted(p.g0) << '\n';
    os << "  T: " << fmt(p.T) << '\n';
  }
  if (c.cost) {
    const auto& k = *c.cost;
    os << "cost:\n";
    os << "  kind: " << k.kind << '\n';
    os << "  alpha1: " << fmt(k.alpha1) << '\n';
    os << "  alpha2: " << fmt(k.alpha2) << '\n';
    if (k.kind == "expression") os << "  h: " << quoted(k.h) << '\n';
  }
  if (c.grid) {
    os << "grid:\n";
    os << "  L: " << fmt(c.grid->L) << '\n';
    os << "  n: " << c.grid->n << '\n';
  }
  if (c.solver) {
    const auto& s = *c.solver;
    os << "solver:\n";
    os << "  eps: " << fmt(s.eps) << '\n';
    os << "  refine_tol: " << fmt(s.refine_tol) << '\n';
    os << "  max_halvings: " << s.max_halvings << '\n';
    os << "  tol_res: " << fmt(s.tol_res) << '\n';
    os << "  max_newton: " << s.max_newton << '\n';
    os << "  include_B: " << (s.include_B ? "true" : "false") << '\n';
    os << "  snapshot_budget: " << s.snapshot_budget << '\n';
  }
  if (c.simulate) {
    const auto& s = *c.simulate;
    os << "simulate:\n";
    os << "  paths: " << s.paths << '\n';
    os << "  dt: " << fmt(s.dt) << '\n';
    os << "  x0: " << fmt(s.x0) << '\n';
    os << "  baselines: " << fmt_list(s.baselines) << '\n';
    os << "  policy: " << s.policy << '\n';
    os << "  constant: " << fmt(s.constant) << '\n';
    os << "  dump_paths: " << (s.dump_paths ? "true" : "false") << '\n';
    os << "  threads: " << s.threads << '\n';
  }
  if (c.sweep) {
    os << "sweep:\n";
    os << "  eps: " << fmt_list(c.sweep->eps) << '\n';
  }
  if (c.degenerate) {
    os << "degenerate:\n";
    os << "  ladder: " << fmt_list(c.degenerate->ladder) << '\n';
    os << "  eps: " << fmt(c.degenerate->eps) << '\n';
  }
  if (c.nd) {
    const auto& n = *c.nd;
    os << "nd:\n";
    os << "  L: " << fmt(n.L) << '\n';
    os << "  n: " << n.n << '\n';
    os << "  a: [" << fmt_list(n.a[0]) << ", " << fmt_list(n.a[1]) << "]\n";
    os << "  sigma0: " << quoted(n.sigma0) << '\n';
    os << "  g: " << quoted(n.g) << '\n';
    os << "  g0: " << quoted(n.g0) << '\n';
    os << "  T: " << fmt(n.T) << '\n';
    os << "  eps: " << fmt(n.eps) << '\n';
    os << "  steps: " << n.steps << '\n';
  }
  if (c.conjugate_table) {
    os << "conjugate_table:\n";
    os << "  p_min: " << fmt(c.conjugate_table->p_min) << '\n';
    os << "  p_max: " << fmt(c.conjugate_table->p_max) << '\n';
    os << "  nodes: " << c.conjugate_table->nodes << '\n';
  }
  return os.str();
}

ScalarFunction make_function(const std::string& expression, const std::string& label,
                             bool need_derivatives) {
  const Expression e = Expression::parse(expression, {"x"});
  ScalarFunction fn;
  fn.label = label + " = " + expression;
  fn.value = [e](double x) { return e(x); };
  if (e.differentiable()) {
    const Expression d1 = e.derivative();
    const Expression d2 = d1.derivative();
    fn.d1 = [d1](double x) { return d1(x); };
    fn.d2 = [d2](double x) { return d2(x); };
  } else if (need_derivatives) {
    throw NonDifferentiableError(label + ": abs(...) is not differentiable");
  } else {
    auto fail = [label](double) -> double {
      throw ConfigError(label + ": derivative of abs(...) requested");
    };
    fn.d1 = fail;
    fn.d2 = fail;
  }
  return fn;
}

RunningCost make_cost(const CostBlock& block) {
  if (block.kind == "quadratic") return RunningCost::quadratic(block.alpha1, block.alpha2);
  const Expression h = Expression::parse(block.h, {"u"});
  return RunningCost::callable([h](double u) { return h(u); }, block.alpha1,
                               block.alpha2, "h(u) = " + block.h);
}

ProblemSpec make_problem(const RunConfig& config) {
  if (!config.problem || !config.cost) {
    throw ConfigError("problem and cost blocks are required");
  }
  const ProblemBlock& p = *config.problem;
  ProblemSpec spec;
  spec.drift = make_function(p.f, "f");
  spec.volatility =
      make_function(p.sigma, "sigma", config.mode == Mode::sweep_degenerate);
  spec.running = make_function(p.g, "g");
  spec.terminal = make_function(p.g0, "g0");
  spec.cost = make_cost(*config.cost);
  spec.horizon = p.T;
  return spec;
}

}  // namespace mildhjb
