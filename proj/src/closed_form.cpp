#include "adjmc/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adjmc {

namespace {

void check_spot_strike(double s, double k) {
  if (!(s > 0.0)) throw std::domain_error("bs_call: spot must be positive");
  if (!(k > 0.0)) throw std::domain_error("bs_call: strike must be positive");
}

struct DPair {
  double d_plus;
  double d_minus;
};

DPair d_values(double s, double k, double v) {
  const double sq = std::sqrt(v);
  const double m = std::log(s / k) / sq;
  return {m + 0.5 * sq, m - 0.5 * sq};
}

}  // namespace

double bs_call(double s, double k, double v) {
  check_spot_strike(s, k);
  if (v < 0.0) throw std::domain_error("bs_call: negative total variance");
  if (v == 0.0) return std::max(s - k, 0.0);
  const auto [dp, dm] = d_values(s, k, v);
  return s * norm_cdf(dp) - k * norm_cdf(dm);
}

void bs_call_greeks_into(double s, double k, double v, GreekBundle& out) {
  check_spot_strike(s, k);
  if (v < 0.0) throw std::domain_error("bs_call_greeks: negative total variance");
  if (out.grad.size() != 1) out.resize(1);
  if (v == 0.0) {
    out.value = std::max(s - k, 0.0);
    out.grad[0] = s > k ? 1.0 : (s < k ? 0.0 : 0.5);
    out.hess(0, 0) = 0.0;
    return;
  }
  const auto [dp, dm] = d_values(s, k, v);
  out.value = s * norm_cdf(dp) - k * norm_cdf(dm);
  out.grad[0] = norm_cdf(dp);
  out.hess(0, 0) = norm_pdf(dp) / (s * std::sqrt(v));
}

GreekBundle bs_call_greeks(double s, double k, double v) {
  GreekBundle out(1);
  bs_call_greeks_into(s, k, v, out);
  return out;
}

SvGreeks bs_greeks_sv(double s, double alpha, double tau, double k) {
  check_spot_strike(s, k);
  if (!(tau > 0.0)) throw std::domain_error("bs_greeks_sv: greeks singular at expiry");
  if (!(alpha > 0.0)) throw std::domain_error("bs_greeks_sv: vol must be positive");
  const double v = alpha * alpha * tau;
  const auto [dp, dm] = d_values(s, k, v);
  const double phi = norm_pdf(dp);
  SvGreeks g;
  g.vega = s * phi * std::sqrt(tau);
  g.vanna = -phi * dm / alpha;
  g.volga = g.vega * dp * dm / alpha;
  return g;
}

double boundary_cva(double t, double lambda, double s, const CallSpec& spec) {
  if (t > spec.maturity) throw std::domain_error("boundary_cva: t beyond maturity");
  const double tau = spec.maturity - t;
  const double v = bs_call(s, spec.strike, spec.sigma_s * spec.sigma_s * tau);
  return -(1.0 - std::exp(-lambda * tau)) * v;
}

void boundary_cva_greeks_into(double t, double lambda, double s, const CallSpec& spec,
                              GreekBundle& out) {
  if (t >= spec.maturity) throw std::domain_error("boundary_cva_greeks: greeks singular at expiry");
  const double tau = spec.maturity - t;
  const double v_total = spec.sigma_s * spec.sigma_s * tau;
  check_spot_strike(s, spec.strike);
  const auto [dp, dm] = d_values(s, spec.strike, v_total);
  const double call_value = s * norm_cdf(dp) - spec.strike * norm_cdf(dm);
  const double call_delta = norm_cdf(dp);
  const double call_gamma = norm_pdf(dp) / (s * std::sqrt(v_total));
  const double surv = std::exp(-lambda * tau);
  const double loss = 1.0 - surv;
  if (out.grad.size() != 2) out.resize(2);
  out.value = -loss * call_value;
  out.grad[0] = -tau * surv * call_value;          // d/dlambda
  out.grad[1] = -loss * call_delta;                // d/dS
  out.hess(0, 0) = tau * tau * surv * call_value;  // d2/dlambda2
  out.hess(0, 1) = -tau * surv * call_delta;       // d2/dlambda dS
  out.hess(1, 0) = out.hess(0, 1);
  out.hess(1, 1) = -loss * call_gamma;             // d2/dS2
}

GreekBundle boundary_cva_greeks(double t, double lambda, double s, const CallSpec& spec) {
  GreekBundle out(2);
  boundary_cva_greeks_into(t, lambda, s, spec, out);
  return out;
}

}  // namespace adjmc
