#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "mildhjb/config.hpp"
#include "mildhjb/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mild-solution HJB solver: solve, reconstruct, synthesize, simulate."};
  app.set_version_flag("--version", mildhjb::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("--config", config_path, "Run configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_option("--seed", seed, "Random seed (overrides the config)");
  app.add_flag("--quiet", quiet, "Suppress progress output");

  const std::pair<mildhjb::Mode, const char*> descriptions[] = {
      {mildhjb::Mode::solve, "Implicit time stepping of the transformed equation"},
      {mildhjb::Mode::value, "Solve, then reconstruct the value function"},
      {mildhjb::Mode::policy, "Solve, reconstruct and synthesize the feedback"},
      {mildhjb::Mode::simulate, "Monte Carlo cost of the feedback against constants"},
      {mildhjb::Mode::sweep_eps, "Solutions over a decreasing time-step ladder"},
      {mildhjb::Mode::sweep_degenerate, "Regularization ladder for degenerate volatility"},
      {mildhjb::Mode::solve_2d, "Drift-free two-dimensional solve"},
      {mildhjb::Mode::conjugate_table, "Tabulate H*, (H*)' and j"},
  };
  for (const auto& [mode, text] : descriptions) {
    app.add_subcommand(mildhjb::to_string(mode), text);
  }

  CLI11_PARSE(app, argc, argv);

  const auto mode = mildhjb::parse_mode(app.get_subcommands().front()->get_name());
  try {
    mildhjb::RunConfig config = mildhjb::load_config(config_path, mode);
    if (seed) config.seed = *seed;
    mildhjb::RunOptions options;
    options.output = out_dir;
    options.quiet = quiet;
    const mildhjb::RunOutcome outcome = mildhjb::run(config, options, std::cout, std::cerr);
    if (outcome.exit_code == mildhjb::kExitOk && !quiet) {
      std::cout << "wrote " << outcome.artifacts.size() << " files to "
                << (out_dir.empty() ? config.output : out_dir) << '\n';
    }
    return outcome.exit_code;
  } catch (const std::exception& e) {
    return mildhjb::report_error(std::cerr, e);
  }
}
