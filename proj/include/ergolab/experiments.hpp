#pragma once

// The desk-scale experiments behind the command line front end.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ergolab/config.hpp"

namespace ergolab {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunOptions {
  std::filesystem::path out_root;
  std::size_t threads = 1;
};

struct RunResult {
  std::string run_id;
  std::filesystem::path dir;
  std::vector<CheckResult> checks;

  bool all_pass() const;
};

/// Runs cfg.command() into a fresh run directory under opts.out_root and writes
/// run_record.json there. Errors from the numerical modules propagate unchanged.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

}  // namespace ergolab
