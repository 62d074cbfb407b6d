#pragma once

#include <functional>
#include <span>

#include "adjmc/model.hpp"

namespace adjmc {

using RateFn = std::function<double(double t, std::span<const double> x)>;
using FlowFn = std::function<double(double t, std::span<const double> x)>;
using TerminalFn = std::function<double(std::span<const double> x)>;

// Discounting rate R, running cashflow F and terminal payoff G of one pricing
// problem.  Any of them may be empty, meaning identically zero.
struct CashflowSpec {
  RateFn discount_rate;
  FlowFn continuous_payoff;
  TerminalFn terminal_payoff;
};

struct PricingProblem {
  ModelDynamics model;
  CashflowSpec cashflows;
  double horizon = 0.0;  // T
};

// A pricing adjustment: the difference of a target problem and a base
// problem, together with an oracle for the base price V and its greeks.  The
// optional terminal_adjustment is the discrete repricing payment
// G_target - G_base at the horizon, used when the integration horizon is
// shorter than the contract's expiry; empty means the terminal payoffs agree.
struct AdjustmentProblem {
  PricingProblem base;
  PricingProblem target;
  PriceOracle base_price;
  TerminalFn terminal_adjustment;

  double horizon() const { return target.horizon; }
  int state_dim() const { return target.model.n; }
};

// Shape and consistency checks; call once after building a problem.
void validate(const AdjustmentProblem& problem);

// The three addends of the expected P&L bleed
//   Z = (L_target - L_base) V  -  (R_target - R_base) V  +  (F_target - F_base):
// a model term, a discounting term and a payoff term.  Each is exactly zero
// when its defining coefficients coincide.
struct BleedTerms {
  double model_term = 0.0;
  double discount_term = 0.0;
  double payoff_term = 0.0;

  double total() const { return model_term + discount_term + payoff_term; }
};

// Reusable bleed evaluator: owns the oracle/covariation workspaces so that
// per-node evaluation in a Monte Carlo loop does not allocate.  Each worker
// thread copies its own instance.
class BleedFunction {
 public:
  explicit BleedFunction(const AdjustmentProblem& problem);

  BleedTerms terms(double t, std::span<const double> x);
  double operator()(double t, std::span<const double> x) { return terms(t, x).total(); }

 private:
  const AdjustmentProblem* problem_;
  GreekBundle greeks_;
  Matrix a_base_;
  Matrix a_target_;
  Vector mu_base_;
  Vector mu_target_;
  Vector sigma_work_;
};

// One-shot conveniences over a fresh workspace.
double bleed(const AdjustmentProblem& problem, double t, std::span<const double> x);
BleedTerms bleed_decomposition(const AdjustmentProblem& problem, double t,
                               std::span<const double> x);

}  // namespace adjmc
