#include <cstdio>
#include <exception>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "adjmc/run_config.hpp"
#include "adjmc/runner.hpp"

namespace {

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

int cmd_list() {
  for (const auto& info : adjmc::experiment_registry()) {
    std::printf("%-20s %s\n", info.name.c_str(), info.description.c_str());
    std::printf("%-20s   defaults: n_paths=%lld n_steps=%lld seed=%llu\n", "",
                static_cast<long long>(info.default_mc.n_paths),
                static_cast<long long>(info.default_mc.n_steps),
                static_cast<unsigned long long>(info.default_mc.seed));
    std::string keys;
    for (const auto& k : info.param_keys) {
      if (!keys.empty()) keys += ", ";
      keys += k;
    }
    std::printf("%-20s   params: %s\n", "", keys.c_str());
  }
  return 0;
}

int cmd_run(const std::string& config_path, int threads, const std::string& output_dir) {
  adjmc::RunConfig cfg = adjmc::parse_run_config(config_path);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  std::printf("experiment %s: n_paths=%lld n_steps=%lld seed=%llu antithetic=%s threads=%d\n",
              cfg.experiment.c_str(), static_cast<long long>(cfg.mc.n_paths),
              static_cast<long long>(cfg.mc.n_steps),
              static_cast<unsigned long long>(cfg.mc.seed), cfg.mc.antithetic ? "true" : "false",
              threads);
  const adjmc::RunResult result = adjmc::run_experiment(cfg, threads);
  std::printf("wrote %s\n", result.results_path.c_str());
  if (!result.csv_path.empty()) std::printf("wrote %s\n", result.csv_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adjustment and meta-adjustment Monte Carlo experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  int threads = default_threads();

  CLI::App* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "run configuration (INI)")->required();
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--output-dir", output_dir, "override the config's output_dir");

  CLI::App* list = app.add_subcommand("list", "list the available experiments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) return cmd_list();
    return cmd_run(config_path, threads, output_dir);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
