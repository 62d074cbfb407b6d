#pragma once

#include <string>

#include "adjmc/run_config.hpp"

namespace adjmc {

// Outcome of one CLI run: where the artifacts went plus the serialized
// results document (handy for tests, which compare documents directly).
struct RunResult {
  std::string results_path;
  std::string csv_path;  // empty when the experiment produces no path ensemble
  std::string results_json;
};

// Executes the configured experiment and writes results.json (plus
// pnl_paths.csv for the ensemble-producing experiments) under
// cfg.output_dir, creating the directory if needed.
RunResult run_experiment(const RunConfig& cfg, int n_threads = 1);

}  // namespace adjmc
