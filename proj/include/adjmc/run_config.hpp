#pragma once

#include <map>
#include <string>
#include <vector>

#include "adjmc/mc.hpp"

namespace adjmc {

// One registered experiment: CLI name, a one-line description, the set of
// keys its [params] section accepts, and its default Monte Carlo budget.
struct ExperimentInfo {
  std::string name;
  std::string description;
  std::vector<std::string> param_keys;
  McConfig default_mc;
};

// Stable-order registry of the shipped experiments.
const std::vector<ExperimentInfo>& experiment_registry();
const ExperimentInfo* find_experiment(const std::string& name);

// Parsed run configuration.  Parsing is strict: unknown sections, unknown
// keys, duplicate keys and malformed values are errors that carry the
// file:line position.
struct RunConfig {
  std::string experiment;
  std::string output_dir = ".";
  McConfig mc;                                // defaults resolved per experiment
  std::map<std::string, std::string> params;  // raw values, typed at use
};

RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& name);

// Typed access to [params] with per-key defaults; conversion failures throw
// std::invalid_argument naming the key.
double param_double(const RunConfig& cfg, const std::string& key, double fallback);
std::int64_t param_int(const RunConfig& cfg, const std::string& key, std::int64_t fallback);
std::vector<double> param_double_list(const RunConfig& cfg, const std::string& key,
                                      const std::vector<double>& fallback);

}  // namespace adjmc
