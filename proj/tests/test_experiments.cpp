#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "adjmc/closed_form.hpp"
#include "adjmc/experiments.hpp"
#include "adjmc/mc.hpp"

using namespace adjmc;

namespace {

McConfig small_cfg(std::int64_t n_paths = 10000, std::int64_t n_steps = 100) {
  McConfig cfg;
  cfg.n_paths = n_paths;
  cfg.n_steps = n_steps;
  cfg.seed = 42;
  return cfg;
}

bool agree(const Estimate& e, double ref, double extra_se = 0.0) {
  return std::abs(e.mean - ref) < 3.0 * (e.std_error + extra_se);
}

}  // namespace

TEST_CASE("rate curves integrate exactly") {
  const RateCurve flat = constant_rate(0.03);
  CHECK(flat.rate(1.7) == 0.03);
  CHECK(flat.integral(2.0) == doctest::Approx(0.06).epsilon(1e-15));

  const RateCurve step = step_rate(0.01, 0.06, 1.5);
  CHECK(step.rate(1.0) == 0.01);
  CHECK(step.rate(2.0) == 0.06);
  CHECK(step.integral(1.0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(step.integral(3.0) == doctest::Approx(0.015 + 0.09).epsilon(1e-15));
}

TEST_CASE("local vol with unchanged dynamics adjusts by exactly zero") {
  LocalVolSpec spec;
  spec.alpha_hat = [&spec](double, double) { return spec.alpha; };
  const LocalVolResult r = run_gatheral_local_vol(spec, small_cfg(500, 20));
  CHECK(r.u_mc.mean == 0.0);
  CHECK(r.u_mc.std_error == 0.0);
}

TEST_CASE("local vol time-step vol matches the total-variance closed form") {
  LocalVolSpec spec;
  spec.alpha_hat = [](double t, double) { return t < 0.5 ? 0.25 : 0.15; };
  spec.alpha_hat_total_variance = 0.25 * 0.25 * 0.5 + 0.15 * 0.15 * 0.5;
  const LocalVolResult r = run_gatheral_local_vol(spec, small_cfg());
  REQUIRE(r.u_ref.has_value());
  CHECK(*r.u_ref == doctest::Approx(bs_call(100, 100, *spec.alpha_hat_total_variance) -
                                    bs_call(100, 100, 0.04))
                        .epsilon(1e-15));
  CHECK(agree(r.u_mc, *r.u_ref));
  CHECK(r.u_mc.std_error > 0.0);
}

TEST_CASE("spot-dependent local vol agrees with direct repricing") {
  LocalVolSpec spec;
  spec.alpha_hat = [](double, double s) { return s < 90.0 ? 0.3 : 0.2; };
  const McConfig cfg = small_cfg(20000, 100);
  const LocalVolResult r = run_gatheral_local_vol(spec, cfg);
  CHECK(!r.u_ref.has_value());
  // raising vol anywhere raises a positive-gamma book
  CHECK(r.u_mc.mean > 0.0);

  const AdjustmentProblem problem = make_local_vol_problem(spec);
  const double x0[] = {spec.s0};
  const auto paths = simulate_paths(problem.target.model, x0, spec.maturity, cfg);
  std::vector<double> payoff;
  payoff.reserve(paths.size());
  for (const auto& p : paths)
    payoff.push_back(std::max(p.state(cfg.n_steps)[0] - spec.strike, 0.0));
  const Estimate direct = summarize(payoff);
  const double u_direct = direct.mean - bs_call(spec.s0, spec.strike, 0.04);
  CHECK(std::abs(r.u_mc.mean - u_direct) < 3.0 * (r.u_mc.std_error + direct.std_error));
}

TEST_CASE("stoch vol with frozen vol dynamics adjusts by exactly zero") {
  StochVolSpec spec;
  spec.beta_hat = [](double, double) { return 0.0; };
  spec.gamma_hat = [](double, double) { return 0.0; };
  const StochVolResult r = run_gatheral_stoch_vol(spec, small_cfg(500, 20));
  CHECK(r.u_mc.mean == 0.0);
  CHECK(r.u_mc.std_error == 0.0);
}

TEST_CASE("stoch vol bleed agrees with direct repricing on shared draws") {
  const StochVolSpec spec = make_sqrt_variance_vol_spec(100, 100, 1.0, 0.2, 1.0, 0.04, 0.1, -0.5);
  const StochVolResult r = run_gatheral_stoch_vol(spec, small_cfg(20000, 100));
  CHECK(std::abs(r.u_mc.mean - r.u_direct.mean) <
        3.0 * (r.u_mc.std_error + r.u_direct.std_error));
  // the bleed estimator is the low-variance one; that is its point
  CHECK(r.var_bleed < r.var_direct);
  CHECK(r.alpha_floor_events == 0);
}

TEST_CASE("uncorrelated driftless vol bleed is the volga term alone") {
  StochVolSpec spec;
  spec.rho_s_alpha = 0.0;
  spec.beta_hat = [](double, double) { return 0.0; };
  const double gamma_hat = 0.07;
  spec.gamma_hat = [gamma_hat](double, double) { return gamma_hat; };
  const AdjustmentProblem problem = make_stoch_vol_problem(spec);
  for (double s : {92.0, 100.0, 111.0}) {
    const double x[] = {s, spec.alpha0};
    const double t = 0.4;
    const double z = bleed(problem, t, x);
    const SvGreeks g = bs_greeks_sv(s, spec.alpha0, spec.maturity - t, spec.strike);
    CHECK(z == doctest::Approx(0.5 * gamma_hat * gamma_hat * g.volga).epsilon(1e-12));
  }
}

TEST_CASE("vol floor events are counted") {
  const StochVolSpec spec = make_sqrt_variance_vol_spec(100, 100, 1.0, 0.2, 1.0, 0.04, 0.1, 0.0);
  CHECK(spec.floor_events->load() == 0);
  const double at_floor = spec.beta_hat(0.0, 1e-12);
  CHECK(at_floor == spec.beta_hat(0.0, 1e-8));
  CHECK(spec.floor_events->load() == 1);
}

TEST_CASE("identical discounting adjusts by exactly zero") {
  DiscountingSpec spec;
  spec.r = constant_rate(0.03);
  spec.r_hat = constant_rate(0.03);
  const DiscountingResult r = run_piterbarg_discounting(spec, small_cfg(500, 20));
  CHECK(r.u_mc.mean == 0.0);
  CHECK(r.u_mc.std_error == 0.0);
  CHECK(r.u_ref == 0.0);
}

TEST_CASE("discounting switch matches the discount-factor closed form") {
  DiscountingSpec spec;
  spec.r = constant_rate(0.02);
  spec.r_hat = constant_rate(0.05);
  const DiscountingResult r = run_piterbarg_discounting(spec, small_cfg());
  const double c0 = bs_call(100, 100, 0.04 * 3.0);
  CHECK(r.u_ref == doctest::Approx((std::exp(-0.15) - std::exp(-0.06)) * c0).epsilon(1e-14));
  CHECK(agree(r.u_mc, r.u_ref));
  CHECK(r.u_mc.mean < 0.0);
}

TEST_CASE("cheaper target discounting raises the price") {
  DiscountingSpec spec;
  spec.r = constant_rate(0.05);
  spec.r_hat = constant_rate(0.02);  // discounting less -> worth more
  const DiscountingResult r = run_piterbarg_discounting(spec, small_cfg(4000, 50));
  CHECK(r.u_ref > 0.0);
  CHECK(r.u_mc.mean > 0.0);
}

TEST_CASE("discounting with step curves keeps the exact reference") {
  DiscountingSpec spec;
  spec.r = constant_rate(0.02);
  spec.r_hat = step_rate(0.01, 0.06, 1.5);
  const DiscountingResult r = run_piterbarg_discounting(spec, small_cfg());
  const double c0 = bs_call(100, 100, 0.12);
  const double df_hat = std::exp(-(0.01 * 1.5 + 0.06 * 1.5));
  CHECK(r.u_ref == doctest::Approx((df_hat - std::exp(-0.06)) * c0).epsilon(1e-13));
  CHECK(agree(r.u_mc, r.u_ref));
}

TEST_CASE("cva with no hazard adjusts by exactly zero") {
  CvaSpec spec;
  spec.r = constant_rate(0.02);
  spec.lambda = constant_rate(0.0);
  const CvaResult r = run_bk_cva(spec, small_cfg(500, 20));
  CHECK(r.u_mc.mean == 0.0);
  CHECK(r.u_mc.std_error == 0.0);
  CHECK(r.u_ref == 0.0);
}

TEST_CASE("cva matches the survival-probability closed form") {
  CvaSpec spec;
  spec.r = constant_rate(0.0);
  spec.lambda = constant_rate(0.05);
  const CvaResult r = run_bk_cva(spec, small_cfg());
  CHECK(r.u_ref == doctest::Approx(-(1.0 - std::exp(-0.15)) * bs_call(100, 100, 0.12))
                       .epsilon(1e-12));
  CHECK(std::abs(r.u_ref - (-1.92)) < 5e-3);
  CHECK(agree(r.u_mc, r.u_ref));
}

TEST_CASE("pure friction flow has zero variance and the annuity value") {
  CvaSpec spec;
  spec.r = constant_rate(0.05);
  spec.lambda = constant_rate(0.0);
  spec.friction = 0.125;
  const CvaResult r = run_bk_cva(spec, small_cfg(200, 400));
  const double annuity_value = 0.125 * (1.0 - std::exp(-0.05 * 3.0)) / 0.05;
  // Every path integrates an identical deterministic flow; the only variance
  // left is the rounding of the sample mean itself, so bound it by an ulp.
  CHECK(r.u_mc.std_error < 1e-15);
  CHECK(r.u_mc.mean == doctest::Approx(annuity_value).epsilon(1e-3));
  CHECK(r.u_ref == doctest::Approx(annuity_value).epsilon(1e-9));
}

TEST_CASE("cva with friction combines both flows against the reference") {
  CvaSpec spec;
  spec.r = constant_rate(0.03);
  spec.lambda = constant_rate(0.05);
  spec.friction = 0.125;
  const CvaResult r = run_bk_cva(spec, small_cfg());
  CHECK(agree(r.u_mc, r.u_ref));
}

TEST_CASE("meta adjustment with no hazard vol is exactly zero") {
  MetaCvaParams params;
  params.sigma_lambda_hat = 0.0;
  const MetaCvaResult r = run_meta_cva(params, small_cfg(500, 20));
  CHECK(r.a0.mean == 0.0);
  CHECK(r.a0.std_error == 0.0);
}

TEST_CASE("meta adjustment rejects a stochastic base hazard") {
  MetaCvaParams params;
  params.sigma_lambda = 0.01;
  CHECK_THROWS_AS(make_meta_cva_problem(params), std::invalid_argument);
  CHECK_THROWS_AS(run_meta_cva(params, small_cfg(100, 10)), std::invalid_argument);
}

TEST_CASE("meta adjustment reproduces its closed-form anchors at a small budget") {
  const MetaCvaParams params;
  const MetaCvaResult r = run_meta_cva(params, small_cfg(5000, 100));
  CHECK(r.v0 == doctest::Approx(bs_call(100, 100, 0.12)).epsilon(1e-15));
  CHECK(std::abs(r.v0 - 13.75) < 5e-3);
  CHECK(std::abs(r.u0 - (-1.92)) < 5e-3);
  CHECK(r.survival_ref == doctest::Approx(std::exp(-0.15)).epsilon(1e-15));
  CHECK(agree(r.survival, r.survival_ref));
  CHECK(r.consistency_gap < r.consistency_tol);
  CHECK(r.se_ratio > 1.0);
  CHECK(r.a0.mean < 0.0);
}

TEST_CASE("horizon invariance holds and degenerates cleanly") {
  TauInvarianceSpec spec;
  spec.taus = {0.0, 0.5, 1.0};
  const McConfig cfg = small_cfg();
  const TauInvarianceResult r = run_tau_invariance(spec, cfg);
  REQUIRE(r.estimates.size() == 3);
  CHECK(r.u_exact == doctest::Approx(bs_call(100, 100, 0.0625) - bs_call(100, 100, 0.04))
                         .epsilon(1e-15));
  // tau = 0: no integration leg at all, pure deterministic repricing
  CHECK(r.estimates[0].mean == r.u_exact);
  CHECK(r.estimates[0].std_error == 0.0);
  for (std::size_t i = 0; i < r.estimates.size(); ++i)
    for (std::size_t j = i + 1; j < r.estimates.size(); ++j)
      CHECK(std::abs(r.estimates[i].mean - r.estimates[j].mean) <
            3.0 * (r.estimates[i].std_error + r.estimates[j].std_error));

  // tau = T carries a vanishing terminal term, so it IS the repricing bleed
  LocalVolSpec lv;
  lv.alpha = spec.alpha;
  const double a_hat = spec.alpha_hat;
  lv.alpha_hat = [a_hat](double, double) { return a_hat; };
  lv.alpha_hat_total_variance = a_hat * a_hat * spec.maturity;
  const LocalVolResult full = run_gatheral_local_vol(lv, cfg);
  CHECK(r.estimates[2].mean == full.u_mc.mean);
  CHECK(r.estimates[2].std_error == full.u_mc.std_error);
}

TEST_CASE("pnl paths under the pricing drift average to the meta adjustment") {
  const McConfig cfg = small_cfg(2000, 50);
  PnlPathsSpec spec;
  spec.n_record = 10;
  const PnlPathsResult pnl = run_pnl_paths(spec, cfg);
  const MetaCvaResult meta = run_meta_cva(spec.params, cfg);
  CHECK(pnl.paths.size() == 10);
  CHECK(pnl.terminal.mean == meta.a0.mean);
  CHECK(pnl.terminal.std_error == meta.a0.std_error);
  for (const auto& p : pnl.paths) {
    CHECK(p.cum_pnl.front() == 0.0);
    CHECK(p.times.back() == spec.params.maturity);
  }
}

TEST_CASE("a real-world drift override shifts the pnl ensemble") {
  const McConfig cfg = small_cfg(2000, 50);
  PnlPathsSpec spec;
  spec.n_record = 0;
  const PnlPathsResult base = run_pnl_paths(spec, cfg);
  spec.lambda_drift_shift = 0.02;
  const PnlPathsResult shifted = run_pnl_paths(spec, cfg);
  CHECK(base.terminal.mean != shifted.terminal.mean);
}
