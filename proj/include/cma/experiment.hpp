#pragma once

// Pipelines behind the command-line tool.  Every run writes CSV files (and
// CMAG grids) into its output directory and returns an exit status:
// 0 pass or converged, 2 a checked inequality failed, 1 an error.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cma/config.hpp"

namespace cma {

inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFail = 2;

struct RunOptions {
  std::filesystem::path out;
  bool dump_stages = false;
  int threads = 1;
};

struct RunResult {
  int exit_code = kExitPass;
  /// Ordered (key, value) summary; also printed as one line.
  std::vector<std::pair<std::string, std::string>> summary;
  std::string summary_line() const;
};

const std::vector<std::string>& commands();

/// Runs one command.  Errors propagate as exceptions; `sweep` records them per
/// cell instead.
RunResult run(const std::string& command, const ExperimentConfig& config, const RunOptions& options);

}  // namespace cma
