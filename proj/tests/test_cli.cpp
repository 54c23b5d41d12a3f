#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>
#include <unistd.h>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("mildhjb_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write(const std::string& name, const std::string& text) {
  const fs::path p = workdir() / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int hjbsolve(const std::string& args) {
  const std::string cmd = std::string(HJBSOLVE_PATH) + " " + args + " >" +
                          (workdir() / "stdout.txt").string() + " 2>" +
                          (workdir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

const std::string kBase = R"(seed: 11
problem:
  preset: desk
cost:
  kind: quadratic
  alpha1: 1
  alpha2: 0
grid:
  L: 10
  n: 101
solver:
  eps: 0.01
)";

}  // namespace

TEST_CASE("version flag") {
  CHECK(hjbsolve("--version") == 0);
  CHECK(slurp(workdir() / "stdout.txt").find("1.0.0") != std::string::npos);
}

TEST_CASE("conjugate-table matches the closed forms") {
  const fs::path cfg = write("conj.yaml", R"(cost:
  kind: quadratic
  alpha1: 0.7
  alpha2: 0.3
conjugate_table:
  p_min: -4
  p_max: 6
  nodes: 101
)");
  const fs::path out = workdir() / "conj";
  REQUIRE(hjbsolve("conjugate-table --config " + cfg.string() + " --out " + out.string() + " --quiet") == 0);
  const fs::path csv = out / "reports" / "conjugate_table.csv";
  CHECK(slurp(csv).rfind("# units:", 0) == 0);
  const auto rows = read_csv(csv);
  REQUIRE(rows.size() == 101);
  const double a1 = 0.7, a2 = 0.3;
  for (const auto& r : rows) {
    const double p = r[0], q = std::max(p, 0.0);
    CHECK(std::abs(r[1] - (q * q / (4 * a1) - a2)) <= 1e-10);
    CHECK(std::abs(r[2] - q / (2 * a1)) <= 1e-10);
    CHECK(std::abs(r[3] - (q * q * q / (12 * a1) - a2 * p)) <= 1e-10);
  }
}

TEST_CASE("solve with T shorter than eps emits y0 only") {
  std::string text = kBase;
  text.replace(text.find("  preset: desk\n"), 15,
               "  preset: desk\n  T: 0.004\n");
  const fs::path cfg = write("short.yaml", text);
  const fs::path out = workdir() / "short";
  REQUIRE(hjbsolve("solve --config " + cfg.string() + " --out " + out.string() + " --quiet") == 0);
  const auto rows = read_csv(out / "fields" / "y.csv");
  REQUIRE(rows.size() == 101);
  for (const auto& r : rows) {
    CHECK(r[0] == 0.0);
    const double x = r[1];
    const double y0 = std::abs(x) == 10.0 ? 0.0 : -(4 * x * x - 2) * std::exp(-x * x);
    CHECK(r[2] == doctest::Approx(y0).epsilon(1e-14).scale(1.0));
  }
}

TEST_CASE("simulate twice gives byte-identical reports; manifest re-run reproduces") {
  std::string text = kBase + "simulate:\n  paths: 400\n  dt: 0.005\n  baselines: [0, 0.5, 1]\n";
  const fs::path cfg = write("sim.yaml", text);
  const fs::path a = workdir() / "sim_a", b = workdir() / "sim_b", c = workdir() / "sim_c";
  REQUIRE(hjbsolve("simulate --config " + cfg.string() + " --out " + a.string() + " --quiet") == 0);
  REQUIRE(hjbsolve("simulate --config " + cfg.string() + " --out " + b.string() + " --quiet") == 0);
  const std::string ra = slurp(a / "reports" / "mc_comparison.csv");
  CHECK(!ra.empty());
  CHECK(ra == slurp(b / "reports" / "mc_comparison.csv"));
  REQUIRE(hjbsolve("simulate --config " + (a / "manifest.txt").string() + " --out " + c.string() + " --quiet") == 0);
  for (const char* f : {"reports/mc_comparison.csv", "policy.csv"}) {
    INFO(f);
    CHECK(slurp(a / f) == slurp(c / f));
  }
  REQUIRE(hjbsolve("simulate --config " + cfg.string() + " --seed 12 --out " + c.string() + " --quiet") == 0);
  CHECK(slurp(c / "reports" / "mc_comparison.csv") != ra);
}

TEST_CASE("value mode: manifest re-run is bit-for-bit on every CSV") {
  const fs::path cfg = write("value.yaml", kBase);
  const fs::path a = workdir() / "val_a", b = workdir() / "val_b";
  REQUIRE(hjbsolve("value --config " + cfg.string() + " --out " + a.string() + " --quiet") == 0);
  REQUIRE(hjbsolve("value --config " + (a / "manifest.txt").string() + " --out " + b.string() + " --quiet") == 0);
  int compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    const fs::path rel = fs::relative(e.path(), a);
    INFO(rel.string());
    CHECK(slurp(e.path()) == slurp(b / rel));
    CHECK(slurp(e.path()).rfind("# units:", 0) == 0);
    ++compared;
  }
  CHECK(compared >= 4);
}

TEST_CASE("exit codes and structured errors") {
  CHECK(hjbsolve("solve --config " + (workdir() / "missing.yaml").string()) != 0);
  const fs::path bad = write("bad.yaml", "problem:\n  preset: desk\ngrid:\n  n: 4\n");
  CHECK(hjbsolve("solve --config " + bad.string()) == 2);
  const std::string err = slurp(workdir() / "stderr.txt");
  CHECK(err.find("error:") != std::string::npos);
  CHECK(err.find("grid.n") != std::string::npos);
  CHECK(err.find("cost") != std::string::npos);

  std::string big = kBase;
  big.replace(big.find("eps: 0.01"), 9, "eps: 0.6");
  big.replace(big.find("  preset: desk\n"), 15, "  preset: desk\n  T: 2\n");
  CHECK(hjbsolve("solve --config " + write("bigeps.yaml", big).string() + " --out " +
                 (workdir() / "bigeps").string() + " --quiet") == 2);

  std::string tight = kBase;
  tight.replace(tight.find("eps: 0.01"), 9, "eps: 0.2\n  max_newton: 1\n  tol_res: 1e-300");
  CHECK(hjbsolve("solve --config " + write("tight.yaml", tight).string() + " --out " +
                 (workdir() / "tight").string() + " --quiet") == 3);
  CHECK(slurp(workdir() / "stderr.txt").find("step") != std::string::npos);

  const fs::path blocker = write("blocker", "not a directory");
  CHECK(hjbsolve("solve --config " + write("io.yaml", kBase).string() + " --out " +
                 (blocker / "sub").string() + " --quiet") == 4);
  CHECK(hjbsolve("--config " + bad.string()) != 0);
}
