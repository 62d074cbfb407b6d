#include "adjmc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace adjmc {

namespace {

double sample_variance(const Estimate& e) {
  return e.std_error * e.std_error * static_cast<double>(e.n_paths);
}

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += f(a + i * h) * ((i & 1) ? 4.0 : 2.0);
  return s * h / 3.0;
}

TerminalFn call_payoff(int spot_index, double strike) {
  return [spot_index, strike](std::span<const double> x) {
    return std::max(x[spot_index] - strike, 0.0);
  };
}

void check_call_inputs(double s0, double strike, double maturity) {
  if (!(s0 > 0.0) || !(strike > 0.0)) throw std::invalid_argument("spot and strike must be positive");
  if (!(maturity > 0.0)) throw std::invalid_argument("maturity must be positive");
}

}  // namespace

RateCurve constant_rate(double r) {
  return {[r](double) { return r; }, [r](double t) { return r * t; }};
}

RateCurve step_rate(double left, double right, double switch_time) {
  return {[=](double t) { return t < switch_time ? left : right; },
          [=](double t) {
            return t < switch_time ? left * t : left * switch_time + right * (t - switch_time);
          }};
}

// ---------------------------------------------------------------------------
// Local vol
// ---------------------------------------------------------------------------

AdjustmentProblem make_local_vol_problem(const LocalVolSpec& spec) {
  check_call_inputs(spec.s0, spec.strike, spec.maturity);
  if (!(spec.alpha > 0.0)) throw std::invalid_argument("local vol: alpha must be positive");
  if (!spec.alpha_hat) throw std::invalid_argument("local vol: alpha_hat missing");

  DriftFn zero_drift = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  const double alpha = spec.alpha;
  DiffusionFn base_diff = [alpha](double, std::span<const double> x, std::span<double> out) {
    out[0] = alpha * x[0];
  };
  auto alpha_hat = spec.alpha_hat;
  DiffusionFn target_diff = [alpha_hat](double t, std::span<const double> x, std::span<double> out) {
    out[0] = alpha_hat(t, x[0]) * x[0];
  };

  AdjustmentProblem problem;
  problem.base.model = make_model(1, 1, zero_drift, base_diff, Matrix::identity(1));
  problem.target.model = make_model(1, 1, zero_drift, target_diff, Matrix::identity(1));
  problem.base.horizon = spec.maturity;
  problem.target.horizon = spec.maturity;
  problem.base.cashflows.terminal_payoff = call_payoff(0, spec.strike);
  problem.target.cashflows.terminal_payoff = problem.base.cashflows.terminal_payoff;

  const double strike = spec.strike;
  const double maturity = spec.maturity;
  problem.base_price = [strike, maturity, alpha](double t, std::span<const double> x,
                                                 GreekBundle& out) {
    const double tau = std::max(maturity - t, 0.0);
    bs_call_greeks_into(x[0], strike, alpha * alpha * tau, out);
  };
  return problem;
}

LocalVolResult run_gatheral_local_vol(const LocalVolSpec& spec, const McConfig& cfg,
                                      int n_threads) {
  const AdjustmentProblem problem = make_local_vol_problem(spec);
  const double x0[] = {spec.s0};
  LocalVolResult out;
  out.u_mc = estimate_adjustment(problem, Measure::Target, x0, cfg, n_threads);
  if (spec.alpha_hat_total_variance) {
    out.u_ref = bs_call(spec.s0, spec.strike, *spec.alpha_hat_total_variance) -
                bs_call(spec.s0, spec.strike, spec.alpha * spec.alpha * spec.maturity);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stochastic vol
// ---------------------------------------------------------------------------

StochVolSpec make_sqrt_variance_vol_spec(double s0, double strike, double maturity, double alpha0,
                                         double kappa, double theta, double vol_of_var,
                                         double rho_s_alpha) {
  StochVolSpec spec;
  spec.s0 = s0;
  spec.strike = strike;
  spec.maturity = maturity;
  spec.alpha0 = alpha0;
  spec.rho_s_alpha = rho_s_alpha;
  spec.floor_events = std::make_shared<std::atomic<std::int64_t>>(0);
  auto counter = spec.floor_events;
  spec.beta_hat = [kappa, theta, vol_of_var, counter](double, double alpha) {
    double a = alpha;
    if (a < 1e-8) {
      a = 1e-8;
      counter->fetch_add(1, std::memory_order_relaxed);
    }
    return kappa * (theta - a * a) / (2.0 * a) - vol_of_var * vol_of_var / (8.0 * a);
  };
  spec.gamma_hat = [vol_of_var](double, double) { return 0.5 * vol_of_var; };
  return spec;
}

AdjustmentProblem make_stoch_vol_problem(const StochVolSpec& spec) {
  check_call_inputs(spec.s0, spec.strike, spec.maturity);
  if (!(spec.alpha0 > 0.0)) throw std::invalid_argument("stoch vol: alpha0 must be positive");
  if (!spec.beta_hat || !spec.gamma_hat)
    throw std::invalid_argument("stoch vol: vol dynamics missing");

  // State x = (S, alpha), factors (W_S, W_alpha).
  DriftFn base_drift = [](double, std::span<const double>, std::span<double> out) {
    out[0] = 0.0;
    out[1] = 0.0;
  };
  auto beta_hat = spec.beta_hat;
  DriftFn target_drift = [beta_hat](double t, std::span<const double> x, std::span<double> out) {
    out[0] = 0.0;
    out[1] = beta_hat(t, x[1]);
  };
  DiffusionFn base_diff = [](double, std::span<const double> x, std::span<double> out) {
    out[0] = x[1] * x[0];
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = 0.0;
  };
  auto gamma_hat = spec.gamma_hat;
  DiffusionFn target_diff = [gamma_hat](double t, std::span<const double> x,
                                        std::span<double> out) {
    out[0] = x[1] * x[0];
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = gamma_hat(t, x[1]);
  };
  Matrix rho = Matrix::identity(2);
  rho(0, 1) = spec.rho_s_alpha;
  rho(1, 0) = spec.rho_s_alpha;

  AdjustmentProblem problem;
  problem.base.model = make_model(2, 2, base_drift, base_diff, rho);
  problem.target.model = make_model(2, 2, target_drift, target_diff, rho);
  problem.base.horizon = spec.maturity;
  problem.target.horizon = spec.maturity;
  problem.base.cashflows.terminal_payoff = call_payoff(0, spec.strike);
  problem.target.cashflows.terminal_payoff = problem.base.cashflows.terminal_payoff;

  const double strike = spec.strike;
  const double maturity = spec.maturity;
  problem.base_price = [strike, maturity](double t, std::span<const double> x, GreekBundle& out) {
    if (out.grad.size() != 2) out.resize(2);
    const double s = x[0];
    const double tau = maturity - t;
    if (tau <= 0.0) {
      // a.s. limits on the grid's terminal node
      out.value = std::max(s - strike, 0.0);
      out.grad[0] = s > strike ? 1.0 : (s < strike ? 0.0 : 0.5);
      out.grad[1] = 0.0;
      out.hess(0, 0) = 0.0;
      out.hess(0, 1) = 0.0;
      out.hess(1, 0) = 0.0;
      out.hess(1, 1) = 0.0;
      return;
    }
    const double alpha = std::max(x[1], 1e-8);
    const double sq = alpha * std::sqrt(tau);
    const double dp = std::log(s / strike) / sq + 0.5 * sq;
    const double dm = dp - sq;
    const double phi = norm_pdf(dp);
    const double vega = s * phi * std::sqrt(tau);
    out.value = s * norm_cdf(dp) - strike * norm_cdf(dm);
    out.grad[0] = norm_cdf(dp);
    out.grad[1] = vega;
    out.hess(0, 0) = phi / (s * sq);
    out.hess(0, 1) = -phi * dm / alpha;
    out.hess(1, 0) = out.hess(0, 1);
    out.hess(1, 1) = vega * dp * dm / alpha;
  };
  return problem;
}

StochVolResult run_gatheral_stoch_vol(const StochVolSpec& spec, const McConfig& cfg,
                                      int n_threads) {
  const AdjustmentProblem problem = make_stoch_vol_problem(spec);
  validate(problem);
  const double x0[] = {spec.s0, spec.alpha0};
  PathEngine engine(problem.target.model, x0, spec.maturity, cfg);
  const double v0 = bs_call(spec.s0, spec.strike, spec.alpha0 * spec.alpha0 * spec.maturity);
  const double strike = spec.strike;
  const std::int64_t n_steps = cfg.n_steps;

  std::vector<double> bleed_draws(static_cast<std::size_t>(cfg.n_paths));
  std::vector<double> direct_draws(static_cast<std::size_t>(cfg.n_paths));
  detail::parallel_for_chunks(cfg.n_paths, n_threads, [&](std::int64_t begin, std::int64_t end) {
    BleedFunction bleed_fn(problem);
    detail::DiscountedIntegrator acc(engine.dt(), n_steps);
    for (std::int64_t p = begin; p < end; ++p) {
      auto leg = [&](bool flip, double& bleed_total, double& payoff) {
        acc.reset();
        engine.walk(p, flip, [&](std::int64_t k, double t, std::span<const double> x) {
          const double zv = bleed_fn(t, x);
          if (!std::isfinite(zv)) throw SimulationError(p, k, "non-finite bleed value");
          acc.add_node(k, zv, 0.0);
          if (k == n_steps) payoff = std::max(x[0] - strike, 0.0);
        });
        bleed_total = acc.total();
      };
      double zb = 0.0, pay = 0.0;
      leg(false, zb, pay);
      if (cfg.antithetic) {
        double zb2 = 0.0, pay2 = 0.0;
        leg(true, zb2, pay2);
        zb = 0.5 * (zb + zb2);
        pay = 0.5 * (pay + pay2);
      }
      bleed_draws[static_cast<std::size_t>(p)] = zb;
      direct_draws[static_cast<std::size_t>(p)] = pay - v0;
    }
  });

  StochVolResult out;
  out.u_mc = summarize(bleed_draws);
  out.u_direct = summarize(direct_draws);
  out.var_bleed = sample_variance(out.u_mc);
  out.var_direct = sample_variance(out.u_direct);
  out.alpha_floor_events = spec.floor_events ? spec.floor_events->load() : 0;
  return out;
}

// ---------------------------------------------------------------------------
// Discounting
// ---------------------------------------------------------------------------

namespace {

// Driftless lognormal spot with constant vol; shared by the discounting and
// CVA examples, where base and target dynamics coincide.
ModelDynamics lognormal_spot(double sigma_s) {
  DriftFn drift = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  DiffusionFn diff = [sigma_s](double, std::span<const double> x, std::span<double> out) {
    out[0] = sigma_s * x[0];
  };
  return make_model(1, 1, drift, diff, Matrix::identity(1));
}

PriceOracle discounted_call_oracle(double strike, double maturity, double sigma_s,
                                   std::function<double(double)> rate_integral) {
  return [strike, maturity, sigma_s, rate_integral](double t, std::span<const double> x,
                                                    GreekBundle& out) {
    const double tau = std::max(maturity - t, 0.0);
    bs_call_greeks_into(x[0], strike, sigma_s * sigma_s * tau, out);
    const double df = std::exp(-(rate_integral(maturity) - rate_integral(t)));
    out.value *= df;
    out.grad[0] *= df;
    out.hess(0, 0) *= df;
  };
}

}  // namespace

AdjustmentProblem make_discounting_problem(const DiscountingSpec& spec) {
  check_call_inputs(spec.s0, spec.strike, spec.maturity);
  if (!(spec.sigma_s > 0.0)) throw std::invalid_argument("discounting: sigma_s must be positive");
  if (!spec.r.rate || !spec.r.integral || !spec.r_hat.rate || !spec.r_hat.integral)
    throw std::invalid_argument("discounting: rate curves incomplete");

  AdjustmentProblem problem;
  problem.base.model = lognormal_spot(spec.sigma_s);
  problem.target.model = problem.base.model;
  problem.base.horizon = spec.maturity;
  problem.target.horizon = spec.maturity;
  auto r = spec.r.rate;
  auto r_hat = spec.r_hat.rate;
  problem.base.cashflows.discount_rate = [r](double t, std::span<const double>) { return r(t); };
  problem.target.cashflows.discount_rate = [r_hat](double t, std::span<const double>) {
    return r_hat(t);
  };
  problem.base.cashflows.terminal_payoff = call_payoff(0, spec.strike);
  problem.target.cashflows.terminal_payoff = problem.base.cashflows.terminal_payoff;
  problem.base_price =
      discounted_call_oracle(spec.strike, spec.maturity, spec.sigma_s, spec.r.integral);
  return problem;
}

DiscountingResult run_piterbarg_discounting(const DiscountingSpec& spec, const McConfig& cfg,
                                            int n_threads) {
  const AdjustmentProblem problem = make_discounting_problem(spec);
  const double x0[] = {spec.s0};
  DiscountingResult out;
  out.u_mc = estimate_adjustment(problem, Measure::Base, x0, cfg, n_threads);
  const double c0 = bs_call(spec.s0, spec.strike, spec.sigma_s * spec.sigma_s * spec.maturity);
  out.u_ref =
      (std::exp(-spec.r_hat.integral(spec.maturity)) - std::exp(-spec.r.integral(spec.maturity))) *
      c0;
  return out;
}

// ---------------------------------------------------------------------------
// CVA
// ---------------------------------------------------------------------------

AdjustmentProblem make_cva_problem(const CvaSpec& spec) {
  check_call_inputs(spec.s0, spec.strike, spec.maturity);
  if (!(spec.sigma_s > 0.0)) throw std::invalid_argument("cva: sigma_s must be positive");
  if (!spec.r.rate || !spec.r.integral || !spec.lambda.rate || !spec.lambda.integral)
    throw std::invalid_argument("cva: rate curves incomplete");

  AdjustmentProblem problem;
  problem.base.model = lognormal_spot(spec.sigma_s);
  problem.target.model = problem.base.model;
  problem.base.horizon = spec.maturity;
  problem.target.horizon = spec.maturity;
  auto r = spec.r.rate;
  auto lambda = spec.lambda.rate;
  problem.base.cashflows.discount_rate = [r](double t, std::span<const double>) { return r(t); };
  problem.target.cashflows.discount_rate = [r, lambda](double t, std::span<const double>) {
    return r(t) + lambda(t);
  };
  problem.base.cashflows.terminal_payoff = call_payoff(0, spec.strike);
  problem.target.cashflows.terminal_payoff = problem.base.cashflows.terminal_payoff;
  problem.base_price =
      discounted_call_oracle(spec.strike, spec.maturity, spec.sigma_s, spec.r.integral);

  // Close-out flow: on default the holder loses nothing on negative exposure
  // beyond the risk-free book, so the target pays -lambda V^- (zero for a long
  // call); a constant payoff friction can be stacked on top.
  const double strike = spec.strike;
  const double maturity = spec.maturity;
  const double sigma_s = spec.sigma_s;
  auto r_int = spec.r.integral;
  const double friction = spec.friction;
  problem.target.cashflows.continuous_payoff = [strike, maturity, sigma_s, r_int, lambda,
                                                friction](double t, std::span<const double> x) {
    const double tau = std::max(maturity - t, 0.0);
    const double df = std::exp(-(r_int(maturity) - r_int(t)));
    const double value = df * bs_call(x[0], strike, sigma_s * sigma_s * tau);
    return -lambda(t) * std::max(-value, 0.0) + friction;
  };
  return problem;
}

CvaResult run_bk_cva(const CvaSpec& spec, const McConfig& cfg, int n_threads) {
  const AdjustmentProblem problem = make_cva_problem(spec);
  const double x0[] = {spec.s0};
  CvaResult out;
  out.u_mc = estimate_adjustment(problem, Measure::Base, x0, cfg, n_threads);
  const double c0 = bs_call(spec.s0, spec.strike, spec.sigma_s * spec.sigma_s * spec.maturity);
  const double v0 = std::exp(-spec.r.integral(spec.maturity)) * c0;
  out.u_ref = -(1.0 - std::exp(-spec.lambda.integral(spec.maturity))) * v0;
  if (spec.friction != 0.0) {
    auto r_int = spec.r.integral;
    auto l_int = spec.lambda.integral;
    const double annuity = simpson(
        [&](double t) { return std::exp(-(r_int(t) + l_int(t))); }, 0.0, spec.maturity, 2000);
    out.u_ref += spec.friction * annuity;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Meta CVA
// ---------------------------------------------------------------------------

AdjustmentProblem make_meta_cva_problem(const MetaCvaParams& params) {
  check_call_inputs(params.s0, params.strike, params.maturity);
  if (params.sigma_lambda != 0.0)
    throw std::invalid_argument(
        "meta-cva: base hazard vol must be 0, the CVA oracle has no closed form otherwise");
  if (!(params.sigma_s > 0.0)) throw std::invalid_argument("meta-cva: sigma_s must be positive");
  if (params.sigma_lambda_hat < 0.0)
    throw std::invalid_argument("meta-cva: sigma_lambda_hat must be nonnegative");
  if (std::fabs(params.rho_lambda_s) > 1.0)
    throw std::invalid_argument("meta-cva: correlation outside [-1, 1]");

  // State x = (lambda, S).  Hazard drift sigma^2 t keeps the survival curve
  // flat at e^{-lambda0 t}; lambda may go negative, which is deliberate.
  const double sl = params.sigma_lambda;
  const double sh = params.sigma_lambda_hat;
  const double ss = params.sigma_s;
  DriftFn base_drift = [sl](double t, std::span<const double>, std::span<double> out) {
    out[0] = sl * sl * t;
    out[1] = 0.0;
  };
  DriftFn target_drift = [sh](double t, std::span<const double>, std::span<double> out) {
    out[0] = sh * sh * t;
    out[1] = 0.0;
  };
  DiffusionFn base_diff = [sl, ss](double, std::span<const double> x, std::span<double> out) {
    out[0] = sl;
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = ss * x[1];
  };
  DiffusionFn target_diff = [sh, ss](double, std::span<const double> x, std::span<double> out) {
    out[0] = sh;
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = ss * x[1];
  };
  Matrix rho = Matrix::identity(2);
  rho(0, 1) = params.rho_lambda_s;
  rho(1, 0) = params.rho_lambda_s;

  AdjustmentProblem problem;
  problem.base.model = make_model(2, 2, base_drift, base_diff, rho);
  problem.target.model = make_model(2, 2, target_drift, target_diff, rho);
  problem.base.horizon = params.maturity;
  problem.target.horizon = params.maturity;

  // The priced object is the CVA itself: discounting at the hazard state and
  // paying the default-loss flow -lambda V^+; its value at the horizon is 0.
  const CallSpec call{params.strike, params.maturity, params.sigma_s};
  RateFn hazard = [](double, std::span<const double> x) { return x[0]; };
  FlowFn loss_flow = [call](double t, std::span<const double> x) {
    const double tau = std::max(call.maturity - t, 0.0);
    const double v = bs_call(x[1], call.strike, call.sigma_s * call.sigma_s * tau);
    return -x[0] * std::max(v, 0.0);
  };
  problem.base.cashflows.discount_rate = hazard;
  problem.target.cashflows.discount_rate = hazard;
  problem.base.cashflows.continuous_payoff = loss_flow;
  problem.target.cashflows.continuous_payoff = loss_flow;

  problem.base_price = [call](double t, std::span<const double> x, GreekBundle& out) {
    if (t >= call.maturity) {
      // the CVA and every greek the bleed touches vanish at expiry
      if (out.grad.size() != 2) out.resize(2);
      out.value = 0.0;
      out.grad[0] = 0.0;
      out.grad[1] = 0.0;
      out.hess(0, 0) = 0.0;
      out.hess(0, 1) = 0.0;
      out.hess(1, 0) = 0.0;
      out.hess(1, 1) = 0.0;
      return;
    }
    boundary_cva_greeks_into(t, x[0], x[1], call, out);
  };
  return problem;
}

MetaCvaResult run_meta_cva(const MetaCvaParams& params, const McConfig& cfg, int n_threads) {
  const AdjustmentProblem problem = make_meta_cva_problem(params);
  validate(problem);
  const double x0[] = {params.lambda0, params.s0};
  PathEngine engine(problem.target.model, x0, params.maturity, cfg);
  const std::int64_t n_steps = cfg.n_steps;
  const double dt = engine.dt();
  const FlowFn& loss_flow = problem.target.cashflows.continuous_payoff;

  std::vector<double> bleed_draws(static_cast<std::size_t>(cfg.n_paths));
  std::vector<double> direct_draws(static_cast<std::size_t>(cfg.n_paths));
  std::vector<double> survival_draws(static_cast<std::size_t>(cfg.n_paths));
  detail::parallel_for_chunks(cfg.n_paths, n_threads, [&](std::int64_t begin, std::int64_t end) {
    BleedFunction bleed_fn(problem);
    detail::DiscountedIntegrator bleed_acc(dt, n_steps);
    detail::DiscountedIntegrator direct_acc(dt, n_steps);
    for (std::int64_t p = begin; p < end; ++p) {
      auto leg = [&](bool flip, double& a_draw, double& direct_draw, double& survival_draw) {
        bleed_acc.reset();
        direct_acc.reset();
        double lambda_trap = 0.0;
        double lambda_prev = 0.0;
        engine.walk(p, flip, [&](std::int64_t k, double t, std::span<const double> x) {
          const double lambda = x[0];
          const double zv = bleed_fn(t, x);
          if (!std::isfinite(zv)) throw SimulationError(p, k, "non-finite bleed value");
          bleed_acc.add_node(k, zv, lambda);
          direct_acc.add_node(k, loss_flow(t, x), lambda);
          if (k > 0) lambda_trap += 0.5 * dt * (lambda_prev + lambda);
          lambda_prev = lambda;
        });
        a_draw = bleed_acc.total();
        direct_draw = direct_acc.total();
        survival_draw = std::exp(-lambda_trap);
      };
      double a = 0.0, direct = 0.0, surv = 0.0;
      leg(false, a, direct, surv);
      if (cfg.antithetic) {
        double a2 = 0.0, d2 = 0.0, s2 = 0.0;
        leg(true, a2, d2, s2);
        a = 0.5 * (a + a2);
        direct = 0.5 * (direct + d2);
        surv = 0.5 * (surv + s2);
      }
      bleed_draws[static_cast<std::size_t>(p)] = a;
      direct_draws[static_cast<std::size_t>(p)] = direct;
      survival_draws[static_cast<std::size_t>(p)] = surv;
    }
  });

  MetaCvaResult out;
  out.v0 = bs_call(params.s0, params.strike, params.sigma_s * params.sigma_s * params.maturity);
  out.u0 = boundary_cva(0.0, params.lambda0, params.s0,
                        CallSpec{params.strike, params.maturity, params.sigma_s});
  out.a0 = summarize(bleed_draws);
  out.u_hat_direct = summarize(direct_draws);
  out.survival = summarize(survival_draws);
  out.survival_ref = std::exp(-params.lambda0 * params.maturity);
  out.consistency_gap = std::fabs(out.u0 + out.a0.mean - out.u_hat_direct.mean);
  out.consistency_tol = 3.0 * (out.a0.std_error + out.u_hat_direct.std_error);
  out.se_ratio = out.a0.std_error > 0.0 ? out.u_hat_direct.std_error / out.a0.std_error : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Horizon invariance
// ---------------------------------------------------------------------------

TauInvarianceResult run_tau_invariance(const TauInvarianceSpec& spec, const McConfig& cfg,
                                       int n_threads) {
  check_call_inputs(spec.s0, spec.strike, spec.maturity);
  if (!(spec.alpha > 0.0) || !(spec.alpha_hat > 0.0))
    throw std::invalid_argument("tau invariance: vols must be positive");
  TauInvarianceResult out;
  const double t_total = spec.maturity;
  out.u_exact = bs_call(spec.s0, spec.strike, spec.alpha_hat * spec.alpha_hat * t_total) -
                bs_call(spec.s0, spec.strike, spec.alpha * spec.alpha * t_total);
  for (const double tau : spec.taus) {
    if (tau < 0.0 || tau > t_total)
      throw std::invalid_argument("tau invariance: tau outside [0, maturity]");
    out.taus.push_back(tau);
    if (tau == 0.0) {
      out.estimates.push_back({out.u_exact, 0.0, cfg.n_paths});
      continue;
    }
    LocalVolSpec lv;
    lv.s0 = spec.s0;
    lv.strike = spec.strike;
    lv.maturity = spec.maturity;
    lv.alpha = spec.alpha;
    const double a_hat = spec.alpha_hat;
    lv.alpha_hat = [a_hat](double, double) { return a_hat; };
    AdjustmentProblem problem = make_local_vol_problem(lv);
    problem.base.horizon = tau;
    problem.target.horizon = tau;
    const double rem = t_total - tau;
    const double strike = spec.strike;
    const double alpha = spec.alpha;
    problem.terminal_adjustment = [strike, rem, alpha, a_hat](std::span<const double> x) {
      return bs_call(x[0], strike, a_hat * a_hat * rem) - bs_call(x[0], strike, alpha * alpha * rem);
    };
    const double x0[] = {spec.s0};
    out.estimates.push_back(estimate_adjustment(problem, Measure::Target, x0, cfg, n_threads));
  }
  return out;
}

// ---------------------------------------------------------------------------
// P&L paths
// ---------------------------------------------------------------------------

PnlPathsResult run_pnl_paths(const PnlPathsSpec& spec, const McConfig& cfg, int n_threads) {
  const AdjustmentProblem problem = make_meta_cva_problem(spec.params);
  validate(problem);
  const double sh = spec.params.sigma_lambda_hat;
  const double shift = spec.lambda_drift_shift;
  const double mu_s = spec.stock_drift_rate;
  DriftFn real_world_drift = [sh, shift, mu_s](double t, std::span<const double> x,
                                               std::span<double> out) {
    out[0] = sh * sh * t + shift;
    out[1] = mu_s * x[1];
  };
  ModelDynamics dynamics = problem.target.model;
  dynamics.drift = real_world_drift;

  const double x0[] = {spec.params.lambda0, spec.params.s0};
  PathEngine engine(dynamics, x0, spec.params.maturity, cfg);
  const std::int64_t n_steps = cfg.n_steps;
  const std::int64_t n_record = std::min<std::int64_t>(std::max<std::int64_t>(spec.n_record, 0),
                                                       cfg.n_paths);
  const RateFn& hazard = problem.target.cashflows.discount_rate;

  PnlPathsResult out;
  out.paths.resize(static_cast<std::size_t>(n_record));
  std::vector<double> totals(static_cast<std::size_t>(cfg.n_paths));
  detail::parallel_for_chunks(cfg.n_paths, n_threads, [&](std::int64_t begin, std::int64_t end) {
    BleedFunction bleed_fn(problem);
    detail::DiscountedIntegrator acc(engine.dt(), n_steps);
    for (std::int64_t p = begin; p < end; ++p) {
      PnlPath* rec = p < n_record ? &out.paths[static_cast<std::size_t>(p)] : nullptr;
      if (rec) {
        rec->times.resize(static_cast<std::size_t>(n_steps) + 1);
        rec->cum_pnl.resize(static_cast<std::size_t>(n_steps) + 1);
      }
      acc.reset();
      engine.walk(p, false, [&](std::int64_t k, double t, std::span<const double> x) {
        const double zv = bleed_fn(t, x);
        if (!std::isfinite(zv)) throw SimulationError(p, k, "non-finite bleed value");
        acc.add_node(k, zv, hazard(t, x));
        if (rec) {
          rec->times[static_cast<std::size_t>(k)] = t;
          rec->cum_pnl[static_cast<std::size_t>(k)] = acc.total();
        }
      });
      totals[static_cast<std::size_t>(p)] = acc.total();
    }
  });
  out.terminal = summarize(totals);
  return out;
}

}  // namespace adjmc
