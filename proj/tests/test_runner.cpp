#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "adjmc/run_config.hpp"
#include "adjmc/runner.hpp"

using namespace adjmc;
namespace fs = std::filesystem;

namespace {

std::string parse_error(const std::string& text) {
  try {
    parse_run_config_text(text, "cfg");
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// results.json text with the volatile timing line removed
std::string stable_part(const std::string& json_text) {
  std::istringstream in(json_text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line))
    if (!contains(line, "timing_seconds")) out << line << '\n';
  return out.str();
}

fs::path fresh_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "adjmc_runner_tests" / leaf;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("experiment registry is stable") {
  const auto& reg = experiment_registry();
  REQUIRE(reg.size() == 7);
  const char* names[] = {"gatheral-local-vol", "gatheral-stoch-vol", "piterbarg", "bk-cva",
                         "meta-cva",           "tau-invariance",     "pnl-paths"};
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(reg[i].name == names[i]);
    CHECK(!reg[i].description.empty());
    CHECK(!reg[i].param_keys.empty());
  }
  CHECK(find_experiment("meta-cva") == &reg[4]);
  CHECK(find_experiment("nope") == nullptr);
}

TEST_CASE("minimal config resolves per-experiment defaults") {
  const RunConfig cfg = parse_run_config_text("experiment = meta-cva\n", "cfg");
  CHECK(cfg.experiment == "meta-cva");
  CHECK(cfg.output_dir == ".");
  CHECK(cfg.mc.n_paths == 100000);
  CHECK(cfg.mc.n_steps == 1000);
  CHECK(cfg.mc.seed == 42);
  CHECK(cfg.mc.antithetic == false);
  CHECK(cfg.params.empty());

  const RunConfig other = parse_run_config_text("experiment = piterbarg\n", "cfg");
  CHECK(other.mc.n_paths == 50000);
  CHECK(other.mc.n_steps == 500);
}

TEST_CASE("config values override defaults") {
  const std::string text =
      "experiment = bk-cva\n"
      "output_dir = /tmp/somewhere\n"
      "\n"
      "# comment\n"
      "[mc]\n"
      "n_paths = 1234\n"
      "seed = 9\n"
      "antithetic = true\n"
      "\n"
      "[params]\n"
      "lambda = 0.07\n";
  const RunConfig cfg = parse_run_config_text(text, "cfg");
  CHECK(cfg.output_dir == "/tmp/somewhere");
  CHECK(cfg.mc.n_paths == 1234);
  CHECK(cfg.mc.n_steps == 500);  // untouched default
  CHECK(cfg.mc.seed == 9);
  CHECK(cfg.mc.antithetic == true);
  CHECK(param_double(cfg, "lambda", 0.05) == 0.07);
  CHECK(param_double(cfg, "friction", 0.5) == 0.5);  // fallback
}

TEST_CASE("parse errors carry the file name and line number") {
  CHECK(contains(parse_error("experiment = meta-cva\n[weird]\n"), "cfg:2"));
  CHECK(contains(parse_error("experiment = meta-cva\n[weird]\n"), "unknown section"));
  CHECK(contains(parse_error("experiment = meta-cva\nbogus = 1\n"), "cfg:2"));
  CHECK(contains(parse_error("experiment = meta-cva\n[mc]\nn_legs = 3\n"), "cfg:3"));
  CHECK(contains(parse_error("experiment = meta-cva\n[mc]\nn_paths = -4\n"), "cfg:3"));
  CHECK(contains(parse_error("experiment = meta-cva\n[mc]\nn_paths = abc\n"), "positive integer"));
  CHECK(contains(parse_error("experiment = meta-cva\n[mc]\nantithetic = yes\n"), "cfg:3"));
  CHECK(contains(parse_error("experiment = meta-cva\n[mc]\nno equals sign\n"), "cfg:3"));
  CHECK(contains(parse_error("experiment = meta-cva\n\n[mc]\nseed = 1\nseed = 2\n"), "cfg:5"));
  CHECK(contains(parse_error("experiment = meta-cva\n\n[mc]\nseed = 1\nseed = 2\n"), "duplicate"));
  CHECK(contains(parse_error("experiment = piterbarg\n[params]\nlambda = 0.1\n"), "cfg:3"));
  CHECK(contains(parse_error("experiment = piterbarg\n[params]\nlambda = 0.1\n"), "'lambda'"));
  CHECK(contains(parse_error("output_dir = .\n"), "missing 'experiment'"));
  CHECK(contains(parse_error("experiment = warp-drive\n"), "unknown experiment"));
  CHECK(contains(parse_error("experiment = meta-cva\n[mc\n"), "malformed section"));
  CHECK(contains(parse_error("experiment = meta-cva\n= 3\n"), "empty key"));
  CHECK(contains(parse_error("experiment =\n"), "empty value"));
}

TEST_CASE("typed parameter access validates values") {
  RunConfig cfg = parse_run_config_text(
      "experiment = tau-invariance\n[params]\ntaus = 0, 0.5 , 1.0\nmaturity = oops\n", "cfg");
  const std::vector<double> taus = param_double_list(cfg, "taus", {});
  REQUIRE(taus.size() == 3);
  CHECK(taus[1] == 0.5);
  CHECK_THROWS_AS(param_double(cfg, "maturity", 1.0), std::invalid_argument);
  CHECK(param_double_list(cfg, "absent", {9.0})[0] == 9.0);

  RunConfig bad_list = parse_run_config_text(
      "experiment = tau-invariance\n[params]\ntaus = 0.1, zebra\n", "cfg");
  CHECK_THROWS_AS(param_double_list(bad_list, "taus", {}), std::invalid_argument);
}

TEST_CASE("runner writes a stable results document") {
  RunConfig cfg = parse_run_config_text(
      "experiment = piterbarg\n[mc]\nn_paths = 400\nn_steps = 20\n", "cfg");
  cfg.output_dir = fresh_dir("piterbarg").string();
  const RunResult first = run_experiment(cfg, 1);
  CHECK(fs::exists(first.results_path));
  CHECK(first.csv_path.empty());

  const nlohmann::json doc = nlohmann::json::parse(first.results_json);
  CHECK(doc.at("schema_version") == 1);
  CHECK(doc.at("experiment") == "piterbarg");
  CHECK(doc.at("mc").at("n_paths") == 400);
  CHECK(doc.at("params").at("r_hat") == 0.05);
  CHECK(doc.at("results").at("u_mc").at("n_paths") == 400);
  CHECK(doc.at("results").at("u_mc").contains("std_error"));
  CHECK(doc.at("timing_seconds").is_number());

  // same config, fresh run: identical output up to timing
  cfg.output_dir = fresh_dir("piterbarg2").string();
  const RunResult second = run_experiment(cfg, 1);
  CHECK(stable_part(first.results_json) == stable_part(second.results_json));

  // the document on disk is the returned document
  std::ifstream in(first.results_path);
  std::stringstream content;
  content << in.rdbuf();
  CHECK(content.str() == first.results_json);
}

TEST_CASE("meta-cva run emits results and a well-formed path ensemble") {
  RunConfig cfg = parse_run_config_text("experiment = meta-cva\n"
                                        "[mc]\n"
                                        "n_paths = 400\n"
                                        "n_steps = 20\n"
                                        "[params]\n"
                                        "csv_paths = 5\n"
                                        "csv_stride = 4\n",
                                        "cfg");
  cfg.output_dir = (fresh_dir("meta") / "nested").string();  // directories get created
  const RunResult run = run_experiment(cfg, 1);
  const nlohmann::json doc = nlohmann::json::parse(run.results_json);
  CHECK(std::abs(doc.at("results").at("v0").get<double>() - 13.75) < 5e-3);
  CHECK(std::abs(doc.at("results").at("u0").get<double>() - (-1.92)) < 5e-3);
  CHECK(doc.at("results").at("a0").at("n_paths") == 400);
  CHECK(doc.at("results").at("se_ratio").get<double>() > 0.0);

  REQUIRE(!run.csv_path.empty());
  std::ifstream csv(run.csv_path);
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line == "path_id,t,cum_pnl");
  int rows = 0;
  int starts = 0;
  double prev_t = -1.0;
  std::string prev_id;
  double last_t = 0.0;
  while (std::getline(csv, line)) {
    ++rows;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const std::string id = line.substr(0, c1);
    const double t = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    const double pnl = std::stod(line.substr(c2 + 1));
    if (id != prev_id) {
      prev_id = id;
      prev_t = -1.0;
      ++starts;
      CHECK(t == 0.0);
      CHECK(pnl == 0.0);
    }
    CHECK(t > prev_t);  // strictly increasing inside a path
    prev_t = t;
    last_t = t;
  }
  CHECK(starts == 5);
  CHECK(rows == 5 * 6);  // nodes 0,4,8,12,16,20
  CHECK(last_t == 3.0);  // ends on the horizon
}

TEST_CASE("csv_paths = 0 suppresses the ensemble file") {
  RunConfig cfg = parse_run_config_text("experiment = meta-cva\n"
                                        "[mc]\n"
                                        "n_paths = 50\n"
                                        "n_steps = 10\n"
                                        "[params]\n"
                                        "csv_paths = 0\n",
                                        "cfg");
  cfg.output_dir = fresh_dir("meta-nocsv").string();
  const RunResult run = run_experiment(cfg, 1);
  CHECK(run.csv_path.empty());
  CHECK(!fs::exists(fs::path(cfg.output_dir) / "pnl_paths.csv"));

  RunConfig pp = parse_run_config_text("experiment = pnl-paths\n"
                                       "[mc]\n"
                                       "n_paths = 50\n"
                                       "n_steps = 10\n"
                                       "[params]\n"
                                       "csv_paths = 0\n",
                                       "cfg");
  pp.output_dir = fresh_dir("pnl-nocsv").string();
  const RunResult pp_run = run_experiment(pp, 1);
  CHECK(pp_run.csv_path.empty());
  CHECK(!fs::exists(fs::path(pp.output_dir) / "pnl_paths.csv"));
}

TEST_CASE("runner propagates engine rejections") {
  RunConfig cfg = parse_run_config_text(
      "experiment = meta-cva\n[mc]\nn_paths = 10\nn_steps = 5\n[params]\nsigma_lambda = 0.5\n",
      "cfg");
  cfg.output_dir = fresh_dir("meta-bad").string();
  CHECK_THROWS_AS(run_experiment(cfg, 1), std::invalid_argument);
}

TEST_CASE("parse_run_config reports unreadable files") {
  CHECK_THROWS_AS(parse_run_config("/nonexistent/path/config.ini"), std::invalid_argument);
}
