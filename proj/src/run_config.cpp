#include "adjmc/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace adjmc {

namespace {

const std::vector<std::string> kMetaCvaKeys = {
    "rho_lambda_s", "sigma_lambda_hat", "sigma_lambda", "sigma_s",
    "lambda0",      "s0",               "strike",       "maturity",
    "csv_paths",    "csv_stride"};

std::vector<ExperimentInfo> build_registry() {
  std::vector<ExperimentInfo> reg;
  reg.push_back({"gatheral-local-vol",
                 "local-volatility repricing bleed on a constant-vol call book (Gatheral 2006)",
                 {"s0", "strike", "maturity", "alpha", "alpha_hat_1", "alpha_hat_2",
                  "alpha_hat_switch_time"},
                 {50000, 500, 42, false}});
  reg.push_back({"gatheral-stoch-vol",
                 "stochastic-vol bleed: vega/vanna/volga carry on a call book (Gatheral 2006)",
                 {"s0", "strike", "maturity", "alpha0", "kappa", "theta", "vol_of_var",
                  "rho_s_alpha"},
                 {50000, 500, 42, false}});
  reg.push_back({"piterbarg",
                 "discounting adjustment on a call under a funding rate switch (Piterbarg 2010)",
                 {"s0", "strike", "maturity", "sigma_s", "r", "r_hat"},
                 {50000, 500, 42, false}});
  reg.push_back({"bk-cva",
                 "unilateral zero-recovery CVA via risky discounting (Burgard & Kjaer)",
                 {"s0", "strike", "maturity", "sigma_s", "r", "lambda", "friction"},
                 {50000, 500, 42, false}});
  reg.push_back({"meta-cva",
                 "hazard-volatility meta-adjustment of a call CVA under Ho-Lee hazard dynamics",
                 kMetaCvaKeys,
                 {100000, 1000, 42, false}});
  reg.push_back({"tau-invariance",
                 "horizon invariance: bleed integrated to tau plus terminal repricing at tau",
                 {"s0", "strike", "maturity", "alpha", "alpha_hat", "taus"},
                 {100000, 1000, 42, false}});
  {
    std::vector<std::string> keys = kMetaCvaKeys;
    keys.push_back("lambda_drift_shift");
    keys.push_back("stock_drift_rate");
    reg.push_back({"pnl-paths",
                   "cumulative hedged-P&L paths under a real-world drift override",
                   std::move(keys),
                   {100000, 1000, 42, false}});
  }
  return reg;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& name, int line, const std::string& message) {
  throw std::invalid_argument(name + ":" + std::to_string(line) + ": " + message);
}

bool parse_bool(const std::string& v, bool& out) {
  if (v == "true") {
    out = true;
    return true;
  }
  if (v == "false") {
    out = false;
    return true;
  }
  return false;
}

template <class Int>
bool parse_integer(const std::string& v, Int& out) {
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

bool parse_real(const std::string& v, double& out) {
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> reg = build_registry();
  return reg;
}

const ExperimentInfo* find_experiment(const std::string& name) {
  for (const auto& info : experiment_registry())
    if (info.name == name) return &info;
  return nullptr;
}

RunConfig parse_run_config_text(const std::string& text, const std::string& name) {
  RunConfig cfg;
  std::map<std::string, std::string> top;
  std::map<std::string, std::string> mc;
  std::map<std::string, int> seen;  // "section/key" -> line
  std::string section;              // "", "mc" or "params"

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  bool have_experiment_line = false;
  int params_section_line = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(name, line_no, "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "mc" && section != "params")
        fail(name, line_no, "unknown section '[" + section + "]'");
      if (section == "params") params_section_line = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(name, line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(name, line_no, "empty key");
    if (value.empty()) fail(name, line_no, "empty value for key '" + key + "'");
    const std::string qualified = section + "/" + key;
    if (seen.count(qualified)) fail(name, line_no, "duplicate key '" + key + "'");
    seen[qualified] = line_no;

    if (section.empty()) {
      if (key == "experiment") {
        cfg.experiment = value;
        have_experiment_line = true;
      } else if (key == "output_dir") {
        cfg.output_dir = value;
      } else {
        fail(name, line_no, "unknown key '" + key + "'");
      }
    } else if (section == "mc") {
      if (key != "n_paths" && key != "n_steps" && key != "seed" && key != "antithetic")
        fail(name, line_no, "unknown key '" + key + "' in [mc]");
      mc[key] = value;
    } else {
      cfg.params[key] = value;
    }
  }

  if (!have_experiment_line) throw std::invalid_argument(name + ": missing 'experiment' key");
  const ExperimentInfo* info = find_experiment(cfg.experiment);
  if (!info) throw std::invalid_argument(name + ": unknown experiment '" + cfg.experiment + "'");

  for (const auto& [key, value] : cfg.params) {
    if (std::find(info->param_keys.begin(), info->param_keys.end(), key) ==
        info->param_keys.end()) {
      const auto it = seen.find("params/" + key);
      fail(name, it != seen.end() ? it->second : params_section_line,
           "unknown key '" + key + "' for experiment '" + cfg.experiment + "'");
    }
  }

  cfg.mc = info->default_mc;
  for (const auto& [key, value] : mc) {
    const int line = seen.at("mc/" + key);
    if (key == "n_paths") {
      if (!parse_integer(value, cfg.mc.n_paths) || cfg.mc.n_paths < 1)
        fail(name, line, "n_paths must be a positive integer");
    } else if (key == "n_steps") {
      if (!parse_integer(value, cfg.mc.n_steps) || cfg.mc.n_steps < 1)
        fail(name, line, "n_steps must be a positive integer");
    } else if (key == "seed") {
      if (!parse_integer(value, cfg.mc.seed)) fail(name, line, "seed must be an unsigned integer");
    } else {
      if (!parse_bool(value, cfg.mc.antithetic)) fail(name, line, "antithetic must be true or false");
    }
  }
  return cfg;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(path + ": cannot open config file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config_text(buffer.str(), path);
}

double param_double(const RunConfig& cfg, const std::string& key, double fallback) {
  const auto it = cfg.params.find(key);
  if (it == cfg.params.end()) return fallback;
  double out;
  if (!parse_real(it->second, out))
    throw std::invalid_argument("param '" + key + "': not a number: '" + it->second + "'");
  return out;
}

std::int64_t param_int(const RunConfig& cfg, const std::string& key, std::int64_t fallback) {
  const auto it = cfg.params.find(key);
  if (it == cfg.params.end()) return fallback;
  std::int64_t out;
  if (!parse_integer(it->second, out))
    throw std::invalid_argument("param '" + key + "': not an integer: '" + it->second + "'");
  return out;
}

std::vector<double> param_double_list(const RunConfig& cfg, const std::string& key,
                                      const std::vector<double>& fallback) {
  const auto it = cfg.params.find(key);
  if (it == cfg.params.end()) return fallback;
  std::vector<double> out;
  std::string token;
  std::istringstream in(it->second);
  while (std::getline(in, token, ',')) {
    token = trim(token);
    double v;
    if (token.empty() || !parse_real(token, v))
      throw std::invalid_argument("param '" + key + "': not a number list: '" + it->second + "'");
    out.push_back(v);
  }
  if (out.empty())
    throw std::invalid_argument("param '" + key + "': empty list");
  return out;
}

}  // namespace adjmc
