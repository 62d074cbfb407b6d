#include "adjmc/bleed.hpp"

#include <algorithm>
#include <stdexcept>

namespace adjmc {

void validate(const AdjustmentProblem& problem) {
  if (problem.base.model.n != problem.target.model.n)
    throw std::invalid_argument("adjustment problem: base/target state dimensions differ");
  if (problem.base.horizon != problem.target.horizon)
    throw std::invalid_argument("adjustment problem: base/target horizons differ");
  if (!(problem.target.horizon > 0.0))
    throw std::invalid_argument("adjustment problem: horizon must be positive");
  if (!problem.base_price) throw std::invalid_argument("adjustment problem: missing price oracle");
}

BleedFunction::BleedFunction(const AdjustmentProblem& problem)
    : problem_(&problem),
      greeks_(problem.state_dim()),
      a_base_(problem.state_dim(), problem.state_dim()),
      a_target_(problem.state_dim(), problem.state_dim()),
      mu_base_(problem.state_dim()),
      mu_target_(problem.state_dim()),
      sigma_work_(static_cast<std::size_t>(problem.state_dim()) *
                  std::max(problem.base.model.d, problem.target.model.d)) {}

BleedTerms BleedFunction::terms(double t, std::span<const double> x) {
  const AdjustmentProblem& p = *problem_;
  const int n = p.state_dim();
  p.base_price(t, x, greeks_);

  BleedTerms out;

  p.base.model.drift(t, x, mu_base_);
  p.target.model.drift(t, x, mu_target_);
  covariation_into(p.base.model, t, x, sigma_work_, a_base_);
  covariation_into(p.target.model, t, x, sigma_work_, a_target_);
  double m = 0.0;
  for (int i = 0; i < n; ++i) m += (mu_target_[i] - mu_base_[i]) * greeks_.grad[i];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m += 0.5 * (a_target_(i, j) - a_base_(i, j)) * greeks_.hess(i, j);
  out.model_term = m;

  const double r_base = p.base.cashflows.discount_rate ? p.base.cashflows.discount_rate(t, x) : 0.0;
  const double r_target =
      p.target.cashflows.discount_rate ? p.target.cashflows.discount_rate(t, x) : 0.0;
  out.discount_term = -(r_target - r_base) * greeks_.value;

  const double f_base =
      p.base.cashflows.continuous_payoff ? p.base.cashflows.continuous_payoff(t, x) : 0.0;
  const double f_target =
      p.target.cashflows.continuous_payoff ? p.target.cashflows.continuous_payoff(t, x) : 0.0;
  out.payoff_term = f_target - f_base;

  return out;
}

double bleed(const AdjustmentProblem& problem, double t, std::span<const double> x) {
  BleedFunction f(problem);
  return f(t, x);
}

BleedTerms bleed_decomposition(const AdjustmentProblem& problem, double t,
                               std::span<const double> x) {
  BleedFunction f(problem);
  return f.terms(t, x);
}

}  // namespace adjmc
