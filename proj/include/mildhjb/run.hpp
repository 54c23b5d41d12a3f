#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mildhjb/config.hpp"

namespace mildhjb {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitIo = 4,
};

struct RunOptions {
  std::filesystem::path output;  // empty: use config.output
  bool quiet = false;
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> artifacts{};  // relative to the output dir
};

/// Executes the pipeline of config.mode and writes manifest.txt, fields/,
/// reports/ and (policy modes) policy.csv under the output directory.
/// Progress goes to `log` unless quiet; failures are reported on `err` as a
/// structured block and mapped to a nonzero exit code.
RunOutcome run(const RunConfig& config, const RunOptions& options,
               std::ostream& log, std::ostream& err);

/// Structured error block for an exception escaping a run or config load.
int report_error(std::ostream& err, const std::exception& e);

}  // namespace mildhjb
