#pragma once

#include "adjmc/model.hpp"
#include "adjmc/normal.hpp"

namespace adjmc {

// Undiscounted Black-Scholes call on total variance v = integrated variance
// to expiry: C(S, K, v) = S N(d+) - K N(d-), d+- = log(S/K)/sqrt(v) +- sqrt(v)/2.
// v = 0 returns the intrinsic value.  Throws std::domain_error for
// non-positive S or K, or negative v.
double bs_call(double s, double k, double v);

// Value, delta and gamma of bs_call with respect to spot, as a 1-d bundle.
// At v = 0 the bundle holds the a.s. limits: intrinsic value, a step delta
// (0.5 on the kink) and zero gamma.  The _into form writes into a preallocated
// bundle for use inside simulation loops.
GreekBundle bs_call_greeks(double s, double k, double v);
void bs_call_greeks_into(double s, double k, double v, GreekBundle& out);

// Vega, vanna and volga of C(S, K, alpha^2 tau) with respect to the vol
// state alpha.  tau is time to expiry.  Throws std::domain_error at tau <= 0
// or alpha <= 0, where volga and vanna have no finite limit on the kink.
struct SvGreeks {
  double vega = 0.0;
  double vanna = 0.0;   // d2C / dS dalpha
  double volga = 0.0;   // d2C / dalpha2
};
SvGreeks bs_greeks_sv(double s, double alpha, double tau, double k);

// Call contract bundled with its lognormal vol for the credit examples.
struct CallSpec {
  double strike = 100.0;
  double maturity = 3.0;
  double sigma_s = 0.2;
};

// Zero-recovery CVA on a call under a deterministic flat hazard, the
// sigma_lambda = 0 boundary of the hazard-vol model:
//   U(t, lambda, S) = -(1 - e^{-lambda (T-t)}) C(S, K, sigma_s^2 (T-t)).
// Valid for any real lambda.  Throws std::domain_error for t > T or S <= 0.
double boundary_cva(double t, double lambda, double s, const CallSpec& spec);

// Full bundle of boundary_cva over the state x = (lambda, S):
//   d/dlambda   = -(T-t) e^{-lambda (T-t)} V
//   d2/dlambda2 = (T-t)^2 e^{-lambda (T-t)} V
//   d2/dlambdaS = -(T-t) e^{-lambda (T-t)} N(d+)
// plus the spot ladder through the call.  Throws std::domain_error at
// t >= T (gamma diverges on the kink) and for S <= 0.
GreekBundle boundary_cva_greeks(double t, double lambda, double s, const CallSpec& spec);
void boundary_cva_greeks_into(double t, double lambda, double s, const CallSpec& spec,
                              GreekBundle& out);

}  // namespace adjmc
