#include "adjmc/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "adjmc/experiments.hpp"

namespace adjmc {

namespace {

using json = nlohmann::ordered_json;

json estimate_json(const Estimate& e) {
  return json{{"mean", e.mean}, {"std_error", e.std_error}, {"n_paths", e.n_paths}};
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

// Down-sampled ensemble: every `stride`-th node of each recorded path plus
// the final node, one row per (path, node).  Empty ensemble, empty string,
// so the caller writes no file at all.
std::string paths_to_csv(const std::vector<PnlPath>& paths, std::int64_t stride) {
  if (paths.empty()) return "";
  std::string out = "path_id,t,cum_pnl\n";
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& path = paths[p];
    const std::size_t last = path.times.size() - 1;
    for (std::size_t k = 0; k < path.times.size();) {
      out += std::to_string(p);
      out += ',';
      out += format_double(path.times[k]);
      out += ',';
      out += format_double(path.cum_pnl[k]);
      out += '\n';
      if (k == last) break;
      k = std::min(k + static_cast<std::size_t>(stride), last);
    }
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

MetaCvaParams meta_params_from(const RunConfig& cfg) {
  const MetaCvaParams d;
  MetaCvaParams p;
  p.rho_lambda_s = param_double(cfg, "rho_lambda_s", d.rho_lambda_s);
  p.sigma_lambda_hat = param_double(cfg, "sigma_lambda_hat", d.sigma_lambda_hat);
  p.sigma_lambda = param_double(cfg, "sigma_lambda", d.sigma_lambda);
  p.sigma_s = param_double(cfg, "sigma_s", d.sigma_s);
  p.lambda0 = param_double(cfg, "lambda0", d.lambda0);
  p.s0 = param_double(cfg, "s0", d.s0);
  p.strike = param_double(cfg, "strike", d.strike);
  p.maturity = param_double(cfg, "maturity", d.maturity);
  return p;
}

json meta_params_json(const MetaCvaParams& p) {
  return json{{"rho_lambda_s", p.rho_lambda_s},
              {"sigma_lambda_hat", p.sigma_lambda_hat},
              {"sigma_lambda", p.sigma_lambda},
              {"sigma_s", p.sigma_s},
              {"lambda0", p.lambda0},
              {"s0", p.s0},
              {"strike", p.strike},
              {"maturity", p.maturity}};
}

std::int64_t csv_stride_from(const RunConfig& cfg) {
  const std::int64_t stride = param_int(cfg, "csv_stride", 10);
  if (stride < 1) throw std::invalid_argument("param 'csv_stride': must be >= 1");
  return stride;
}

std::int64_t csv_paths_from(const RunConfig& cfg) {
  const std::int64_t n = param_int(cfg, "csv_paths", 100);
  if (n < 0) throw std::invalid_argument("param 'csv_paths': must be >= 0");
  return n;
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg, int n_threads) {
  const auto t0 = std::chrono::steady_clock::now();
  json params;
  json results;
  std::string csv;

  if (cfg.experiment == "gatheral-local-vol") {
    LocalVolSpec spec;
    spec.s0 = param_double(cfg, "s0", spec.s0);
    spec.strike = param_double(cfg, "strike", spec.strike);
    spec.maturity = param_double(cfg, "maturity", spec.maturity);
    spec.alpha = param_double(cfg, "alpha", spec.alpha);
    const double a1 = param_double(cfg, "alpha_hat_1", 0.25);
    const double a2 = param_double(cfg, "alpha_hat_2", 0.15);
    const double sw = param_double(cfg, "alpha_hat_switch_time", 0.5 * spec.maturity);
    spec.alpha_hat = [a1, a2, sw](double t, double) { return t < sw ? a1 : a2; };
    const double t1 = std::clamp(sw, 0.0, spec.maturity);
    spec.alpha_hat_total_variance = a1 * a1 * t1 + a2 * a2 * (spec.maturity - t1);
    params = {{"s0", spec.s0},
              {"strike", spec.strike},
              {"maturity", spec.maturity},
              {"alpha", spec.alpha},
              {"alpha_hat_1", a1},
              {"alpha_hat_2", a2},
              {"alpha_hat_switch_time", sw}};
    const LocalVolResult r = run_gatheral_local_vol(spec, cfg.mc, n_threads);
    results = {{"u_mc", estimate_json(r.u_mc)},
               {"u_ref", *r.u_ref},
               {"abs_error", std::abs(r.u_mc.mean - *r.u_ref)}};
  } else if (cfg.experiment == "gatheral-stoch-vol") {
    const double s0 = param_double(cfg, "s0", 100.0);
    const double strike = param_double(cfg, "strike", 100.0);
    const double maturity = param_double(cfg, "maturity", 1.0);
    const double alpha0 = param_double(cfg, "alpha0", 0.2);
    const double kappa = param_double(cfg, "kappa", 1.0);
    const double theta = param_double(cfg, "theta", 0.04);
    const double vol_of_var = param_double(cfg, "vol_of_var", 0.1);
    const double rho = param_double(cfg, "rho_s_alpha", -0.5);
    params = {{"s0", s0},           {"strike", strike},
              {"maturity", maturity}, {"alpha0", alpha0},
              {"kappa", kappa},     {"theta", theta},
              {"vol_of_var", vol_of_var}, {"rho_s_alpha", rho}};
    const StochVolSpec spec =
        make_sqrt_variance_vol_spec(s0, strike, maturity, alpha0, kappa, theta, vol_of_var, rho);
    const StochVolResult r = run_gatheral_stoch_vol(spec, cfg.mc, n_threads);
    results = {{"u_mc", estimate_json(r.u_mc)},
               {"u_direct", estimate_json(r.u_direct)},
               {"consistency_gap", std::abs(r.u_mc.mean - r.u_direct.mean)},
               {"consistency_tol", 3.0 * (r.u_mc.std_error + r.u_direct.std_error)},
               {"alpha_floor_events", r.alpha_floor_events}};
  } else if (cfg.experiment == "piterbarg") {
    DiscountingSpec spec;
    spec.s0 = param_double(cfg, "s0", spec.s0);
    spec.strike = param_double(cfg, "strike", spec.strike);
    spec.maturity = param_double(cfg, "maturity", spec.maturity);
    spec.sigma_s = param_double(cfg, "sigma_s", spec.sigma_s);
    const double r_level = param_double(cfg, "r", 0.02);
    const double r_hat_level = param_double(cfg, "r_hat", 0.05);
    spec.r = constant_rate(r_level);
    spec.r_hat = constant_rate(r_hat_level);
    params = {{"s0", spec.s0},         {"strike", spec.strike}, {"maturity", spec.maturity},
              {"sigma_s", spec.sigma_s}, {"r", r_level},          {"r_hat", r_hat_level}};
    const DiscountingResult r = run_piterbarg_discounting(spec, cfg.mc, n_threads);
    results = {{"u_mc", estimate_json(r.u_mc)},
               {"u_ref", r.u_ref},
               {"abs_error", std::abs(r.u_mc.mean - r.u_ref)}};
  } else if (cfg.experiment == "bk-cva") {
    CvaSpec spec;
    spec.s0 = param_double(cfg, "s0", spec.s0);
    spec.strike = param_double(cfg, "strike", spec.strike);
    spec.maturity = param_double(cfg, "maturity", spec.maturity);
    spec.sigma_s = param_double(cfg, "sigma_s", spec.sigma_s);
    const double r_level = param_double(cfg, "r", 0.0);
    const double lambda_level = param_double(cfg, "lambda", 0.05);
    spec.friction = param_double(cfg, "friction", 0.0);
    spec.r = constant_rate(r_level);
    spec.lambda = constant_rate(lambda_level);
    params = {{"s0", spec.s0},           {"strike", spec.strike},
              {"maturity", spec.maturity}, {"sigma_s", spec.sigma_s},
              {"r", r_level},            {"lambda", lambda_level},
              {"friction", spec.friction}};
    const CvaResult r = run_bk_cva(spec, cfg.mc, n_threads);
    results = {{"u_mc", estimate_json(r.u_mc)},
               {"u_ref", r.u_ref},
               {"abs_error", std::abs(r.u_mc.mean - r.u_ref)}};
  } else if (cfg.experiment == "meta-cva") {
    const MetaCvaParams p = meta_params_from(cfg);
    const std::int64_t csv_paths = csv_paths_from(cfg);
    const std::int64_t csv_stride = csv_stride_from(cfg);
    params = meta_params_json(p);
    params["csv_paths"] = csv_paths;
    params["csv_stride"] = csv_stride;
    const MetaCvaResult r = run_meta_cva(p, cfg.mc, n_threads);
    results = {{"v0", r.v0},
               {"u0", r.u0},
               {"a0", estimate_json(r.a0)},
               {"u_hat_direct", estimate_json(r.u_hat_direct)},
               {"consistency_gap", r.consistency_gap},
               {"consistency_tol", r.consistency_tol},
               {"survival", estimate_json(r.survival)},
               {"survival_ref", r.survival_ref},
               {"se_ratio", r.se_ratio}};
    if (csv_paths > 0) {
      // Counter-based streams make the first csv_paths paths of a shorter run
      // identical to those of the full run, so the ensemble is a faithful
      // subsample at a fraction of the cost.
      PnlPathsSpec ps;
      ps.params = p;
      ps.n_record = csv_paths;
      McConfig sub = cfg.mc;
      sub.n_paths = std::min(csv_paths, cfg.mc.n_paths);
      sub.antithetic = false;
      csv = paths_to_csv(run_pnl_paths(ps, sub, n_threads).paths, csv_stride);
    }
  } else if (cfg.experiment == "tau-invariance") {
    TauInvarianceSpec spec;
    spec.s0 = param_double(cfg, "s0", spec.s0);
    spec.strike = param_double(cfg, "strike", spec.strike);
    spec.maturity = param_double(cfg, "maturity", spec.maturity);
    spec.alpha = param_double(cfg, "alpha", spec.alpha);
    spec.alpha_hat = param_double(cfg, "alpha_hat", spec.alpha_hat);
    const double t_total = spec.maturity;
    spec.taus = param_double_list(cfg, "taus",
                                  {0.0, 0.25 * t_total, 0.5 * t_total, t_total});
    params = {{"s0", spec.s0},       {"strike", spec.strike}, {"maturity", spec.maturity},
              {"alpha", spec.alpha}, {"alpha_hat", spec.alpha_hat}, {"taus", spec.taus}};
    const TauInvarianceResult r = run_tau_invariance(spec, cfg.mc, n_threads);
    json rows = json::array();
    for (std::size_t i = 0; i < r.taus.size(); ++i) {
      json row = estimate_json(r.estimates[i]);
      row["tau"] = r.taus[i];
      rows.push_back(std::move(row));
    }
    results = {{"u_exact", r.u_exact}, {"estimates", rows}};
  } else if (cfg.experiment == "pnl-paths") {
    PnlPathsSpec spec;
    spec.params = meta_params_from(cfg);
    spec.lambda_drift_shift = param_double(cfg, "lambda_drift_shift", 0.0);
    spec.stock_drift_rate = param_double(cfg, "stock_drift_rate", 0.0);
    spec.n_record = csv_paths_from(cfg);
    const std::int64_t csv_stride = csv_stride_from(cfg);
    params = meta_params_json(spec.params);
    params["lambda_drift_shift"] = spec.lambda_drift_shift;
    params["stock_drift_rate"] = spec.stock_drift_rate;
    params["csv_paths"] = spec.n_record;
    params["csv_stride"] = csv_stride;
    const PnlPathsResult r = run_pnl_paths(spec, cfg.mc, n_threads);
    results = {{"terminal", estimate_json(r.terminal)},
               {"n_paths_recorded", static_cast<std::int64_t>(r.paths.size())}};
    csv = paths_to_csv(r.paths, csv_stride);
  } else {
    throw std::invalid_argument("unknown experiment '" + cfg.experiment + "'");
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json doc;
  doc["schema_version"] = 1;
  doc["experiment"] = cfg.experiment;
  doc["mc"] = {{"n_paths", cfg.mc.n_paths},
               {"n_steps", cfg.mc.n_steps},
               {"seed", cfg.mc.seed},
               {"antithetic", cfg.mc.antithetic}};
  doc["params"] = params;
  doc["results"] = results;
  doc["timing_seconds"] = elapsed;

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  RunResult out;
  out.results_json = doc.dump(2) + "\n";
  out.results_path = (dir / "results.json").string();
  write_text_file(out.results_path, out.results_json);
  if (!csv.empty()) {
    out.csv_path = (dir / "pnl_paths.csv").string();
    write_text_file(out.csv_path, csv);
  }
  return out;
}

}  // namespace adjmc
