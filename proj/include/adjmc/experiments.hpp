#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "adjmc/closed_form.hpp"
#include "adjmc/mc.hpp"

namespace adjmc {

// Deterministic short-rate curve together with its running integral
// int_0^t r ds, so discount factors are exact rather than quadratured.
struct RateCurve {
  std::function<double(double)> rate;
  std::function<double(double)> integral;
};
RateCurve constant_rate(double r);
// Piecewise-constant in time: value `left` before `switch_time`, `right` after.
RateCurve step_rate(double left, double right, double switch_time);

// ---------------------------------------------------------------------------
// Local-volatility vs Black-Scholes call: paths follow dS = alpha_hat(t,S) S dW,
// the bleed reprices the constant-alpha call book.
// ---------------------------------------------------------------------------
struct LocalVolSpec {
  double s0 = 100.0;
  double strike = 100.0;
  double maturity = 1.0;
  double alpha = 0.2;
  std::function<double(double t, double s)> alpha_hat;
  // int_0^T alpha_hat(t)^2 dt when alpha_hat does not depend on S; enables the
  // time-dependent closed-form reference.
  std::optional<double> alpha_hat_total_variance;
};

struct LocalVolResult {
  Estimate u_mc;
  std::optional<double> u_ref;
};

AdjustmentProblem make_local_vol_problem(const LocalVolSpec& spec);
LocalVolResult run_gatheral_local_vol(const LocalVolSpec& spec, const McConfig& cfg,
                                      int n_threads = 1);

// ---------------------------------------------------------------------------
// Stochastic-volatility adjustment on the state (S, alpha): vol drift
// beta_hat and vol-of-vol gamma_hat switch on under the target measure, and
// the bleed combines vega, vanna and volga of the constant-vol call price.
// ---------------------------------------------------------------------------
struct StochVolSpec {
  double s0 = 100.0;
  double strike = 100.0;
  double maturity = 1.0;
  double alpha0 = 0.2;
  double rho_s_alpha = 0.0;
  std::function<double(double t, double alpha)> beta_hat;
  std::function<double(double t, double alpha)> gamma_hat;
  // Incremented whenever a coefficient evaluation floors alpha at 1e-8.
  std::shared_ptr<std::atomic<std::int64_t>> floor_events;
};

// Variance dynamics dv = kappa (theta - v) dt + vol_of_var sqrt(v) dW mapped
// to vol coordinates alpha = sqrt(v).
StochVolSpec make_sqrt_variance_vol_spec(double s0, double strike, double maturity, double alpha0,
                                         double kappa, double theta, double vol_of_var,
                                         double rho_s_alpha);

struct StochVolResult {
  Estimate u_mc;      // bleed estimator
  Estimate u_direct;  // terminal repricing estimator on the same draws
  double var_bleed = 0.0;
  double var_direct = 0.0;
  std::int64_t alpha_floor_events = 0;
};

AdjustmentProblem make_stoch_vol_problem(const StochVolSpec& spec);
StochVolResult run_gatheral_stoch_vol(const StochVolSpec& spec, const McConfig& cfg,
                                      int n_threads = 1);

// ---------------------------------------------------------------------------
// Discounting adjustment: same dynamics, the target discounts at r_hat
// instead of r.  Paths run under the base measure.
// ---------------------------------------------------------------------------
struct DiscountingSpec {
  double s0 = 100.0;
  double strike = 100.0;
  double maturity = 3.0;
  double sigma_s = 0.2;
  RateCurve r;
  RateCurve r_hat;
};

struct DiscountingResult {
  Estimate u_mc;
  double u_ref = 0.0;  // (DF_hat(T) - DF(T)) C0, exact for deterministic curves
};

AdjustmentProblem make_discounting_problem(const DiscountingSpec& spec);
DiscountingResult run_piterbarg_discounting(const DiscountingSpec& spec, const McConfig& cfg,
                                            int n_threads = 1);

// ---------------------------------------------------------------------------
// Unilateral zero-recovery CVA on a call under deterministic rates: the
// target discounts at r + lambda and pays the close-out flow -lambda V^- (zero
// for a long call), so the bleed is -lambda V^+ plus an optional constant
// payoff friction.
// ---------------------------------------------------------------------------
struct CvaSpec {
  double s0 = 100.0;
  double strike = 100.0;
  double maturity = 3.0;
  double sigma_s = 0.2;
  RateCurve r;
  RateCurve lambda;
  double friction = 0.0;
};

struct CvaResult {
  Estimate u_mc;
  double u_ref = 0.0;  // -(1 - e^{-int lambda}) V0 + friction annuity
};

AdjustmentProblem make_cva_problem(const CvaSpec& spec);
CvaResult run_bk_cva(const CvaSpec& spec, const McConfig& cfg, int n_threads = 1);

// ---------------------------------------------------------------------------
// Meta-adjustment: hazard-rate volatility risk on the call CVA.  State
// x = (lambda, S); under the base measure the hazard is frozen
// (sigma_lambda = 0, where the CVA has a closed form), under the target it
// follows dlambda = sigma_lambda_hat^2 t dt + sigma_lambda_hat dW, whose
// drift keeps E[e^{-int lambda}] = e^{-lambda0 T} flat.
// ---------------------------------------------------------------------------
struct MetaCvaParams {
  double rho_lambda_s = 0.9;
  double sigma_lambda_hat = 0.01;
  double sigma_lambda = 0.0;
  double sigma_s = 0.2;
  double lambda0 = 0.05;
  double s0 = 100.0;
  double strike = 100.0;
  double maturity = 3.0;
};

struct MetaCvaResult {
  double v0 = 0.0;            // base call price
  double u0 = 0.0;            // closed-form CVA at sigma_lambda = 0
  Estimate a0;                // meta-adjustment (bleed estimator)
  Estimate u_hat_direct;      // CVA re-estimated directly under the target hazard
  Estimate survival;          // E[e^{-int lambda dt}] under the target
  double survival_ref = 0.0;  // e^{-lambda0 T}
  double consistency_gap = 0.0;  // |u0 + a0 - u_hat_direct|
  double consistency_tol = 0.0;  // 3 (se(a0) + se(u_hat_direct))
  double se_ratio = 0.0;         // se(u_hat_direct) / se(a0)
};

// Throws std::invalid_argument unless sigma_lambda == 0: only the frozen-
// hazard base admits the closed-form oracle.
AdjustmentProblem make_meta_cva_problem(const MetaCvaParams& params);
MetaCvaResult run_meta_cva(const MetaCvaParams& params, const McConfig& cfg, int n_threads = 1);

// ---------------------------------------------------------------------------
// Horizon invariance: integrating the bleed to tau < T and repricing the
// remaining book in both models at tau gives the same adjustment for every
// tau.  tau = 0 degenerates to the deterministic difference of call prices.
// ---------------------------------------------------------------------------
struct TauInvarianceSpec {
  double s0 = 100.0;
  double strike = 100.0;
  double maturity = 1.0;
  double alpha = 0.2;
  double alpha_hat = 0.25;
  std::vector<double> taus;  // horizons in [0, maturity]
};

struct TauInvarianceResult {
  std::vector<double> taus;
  std::vector<Estimate> estimates;
  double u_exact = 0.0;  // C(S0, K, alpha_hat^2 T) - C(S0, K, alpha^2 T)
};

TauInvarianceResult run_tau_invariance(const TauInvarianceSpec& spec, const McConfig& cfg,
                                       int n_threads = 1);

// ---------------------------------------------------------------------------
// Hedged-portfolio P&L paths: cumulative discounted bleed along paths drawn
// under a real-world drift override (defaults reproduce the pricing measure,
// where the mean terminal P&L is the meta-adjustment itself).
// ---------------------------------------------------------------------------
struct PnlPathsSpec {
  MetaCvaParams params;
  double lambda_drift_shift = 0.0;  // additive hazard drift under the override
  double stock_drift_rate = 0.0;    // equity drift mu in dS = mu S dt + ...
  std::int64_t n_record = 100;      // paths kept for the ensemble output
};

struct PnlPathsResult {
  std::vector<PnlPath> paths;  // first min(n_record, n_paths) paths
  Estimate terminal;           // terminal P&L over all n_paths
};

PnlPathsResult run_pnl_paths(const PnlPathsSpec& spec, const McConfig& cfg, int n_threads = 1);

}  // namespace adjmc
