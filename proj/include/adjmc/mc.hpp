#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "adjmc/bleed.hpp"
#include "adjmc/errors.hpp"
#include "adjmc/model.hpp"
#include "adjmc/rng.hpp"

namespace adjmc {

struct McConfig {
  std::int64_t n_paths = 10000;
  std::int64_t n_steps = 100;
  std::uint64_t seed = 0;
  bool antithetic = false;  // estimators average flipped-draw pairs, one draw per pair
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_paths = 0;
};

// Which model drives the simulated paths.  Adjustments integrate bleed under
// the target measure; pure discounting/payoff cases (identical generators)
// may equivalently run under the base measure.
enum class Measure { Base, Target };

// One Euler path on the uniform grid t_k = k T / n_steps.
struct Path {
  int n = 0;
  std::vector<double> times;   // n_steps + 1 entries
  std::vector<double> states;  // (n_steps + 1) x n, row-major

  std::span<const double> state(std::int64_t k) const {
    return {states.data() + static_cast<std::size_t>(k) * n, static_cast<std::size_t>(n)};
  }
};

// Cumulative discounted bleed along one path:
//   cum_pnl[k] ~ integral_0^{t_k} exp(-int_0^u R du) Z(u, x_u) du
// (trapezoid in the integrand, left-Riemann in the discount exponent).
struct PnlPath {
  std::vector<double> times;
  std::vector<double> cum_pnl;
};

// Sample mean and standard error (sample sd / sqrt(N)) of the draws.
Estimate summarize(std::span<const double> draws);

namespace detail {

// Runs body(begin, end) over [0, n) split into contiguous chunks, one chunk
// per worker.  n_threads <= 1 runs inline; 0 means hardware concurrency.
// The first exception thrown by any worker is rethrown after all join.
void parallel_for_chunks(std::int64_t n, int n_threads,
                         const std::function<void(std::int64_t, std::int64_t)>& body);

int resolve_threads(int n_threads);

// Streaming discounted trapezoid integrator for one path.  Feed every grid
// node in order; the discount exponent accrues the left endpoint's rate, so
// the factor applied at node k is exp(-sum_{j<k} R(t_j, x_j) dt).
class DiscountedIntegrator {
 public:
  DiscountedIntegrator(double dt, std::int64_t n_steps) : dt_(dt), n_steps_(n_steps) {}

  void reset() {
    df_ = 1.0;
    prev_integrand_ = 0.0;
    total_ = 0.0;
    node_discount_ = 1.0;
  }

  void add_node(std::int64_t k, double z, double rate) {
    node_discount_ = df_;
    const double integrand = df_ * z;
    if (k > 0) total_ += 0.5 * dt_ * (prev_integrand_ + integrand);
    prev_integrand_ = integrand;
    if (k < n_steps_) df_ *= std::exp(-rate * dt_);
  }

  double total() const { return total_; }
  double node_discount() const { return node_discount_; }  // factor used at the last node fed

 private:
  double dt_;
  std::int64_t n_steps_;
  double df_ = 1.0;
  double prev_integrand_ = 0.0;
  double total_ = 0.0;
  double node_discount_ = 1.0;
};

}  // namespace detail

// Euler-Maruyama walker over counter-based Gaussian draws.  Paths are pure
// functions of (seed, path index), so ensembles are reproducible draw-for-draw
// under any scheduling and any worker count.
class PathEngine {
 public:
  PathEngine(const ModelDynamics& model, std::span<const double> x0, double horizon,
             const McConfig& cfg);

  std::int64_t n_steps() const { return cfg_.n_steps; }
  std::int64_t n_paths() const { return cfg_.n_paths; }
  double dt() const { return dt_; }
  double horizon() const { return horizon_; }
  double time_at(std::int64_t k) const { return k == cfg_.n_steps ? horizon_ : k * dt_; }

  // Invokes node(k, t_k, x_k) for k = 0..n_steps.  `flip` negates every
  // Gaussian draw (antithetic leg).
  template <class NodeFn>
  void walk(std::int64_t path, bool flip, NodeFn&& node) const {
    const ModelDynamics& m = *model_;
    const int n = m.n;
    const int d = m.d;
    const NormalStream stream = stream_;  // thread-private block cache
    std::vector<double> x(x0_);
    std::vector<double> mu(n), sigma(static_cast<std::size_t>(n) * d), z_raw(d), z_corr(d);
    const double sqrt_dt = std::sqrt(dt_);
    node(std::int64_t{0}, 0.0, std::span<const double>(x));
    for (std::int64_t k = 0; k < cfg_.n_steps; ++k) {
      const double t = k * dt_;
      for (int j = 0; j < d; ++j) {
        const double g = stream(static_cast<std::uint64_t>(path), static_cast<std::uint64_t>(k),
                                static_cast<std::uint32_t>(j));
        z_raw[j] = flip ? -g : g;
      }
      lower_tri_apply(m.correlation_chol, z_raw, z_corr);
      m.drift(t, x, mu);
      m.diffusion(t, x, sigma);
      for (int i = 0; i < n; ++i) {
        double diff = 0.0;
        const double* row = sigma.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) diff += row[j] * z_corr[j];
        x[i] += mu[i] * dt_ + sqrt_dt * diff;
        if (!std::isfinite(x[i]))
          throw SimulationError(path, k + 1, "non-finite state coordinate " + std::to_string(i));
      }
      node(k + 1, time_at(k + 1), std::span<const double>(x));
    }
  }

 private:
  const ModelDynamics* model_;
  std::vector<double> x0_;
  double horizon_;
  double dt_;
  McConfig cfg_;
  NormalStream stream_;
};

// Materialized ensemble (memory is n_paths x (n_steps + 1) x n doubles; meant
// for diagnostics and tests, estimators stream instead).  Antithetic flips do
// not apply here: these are the primary-draw paths.
std::vector<Path> simulate_paths(const ModelDynamics& model, std::span<const double> x0,
                                 double horizon, const McConfig& cfg, int n_threads = 1);

// Discounted bleed integral along one materialized path.
PnlPath integrate_discounted_bleed(const Path& path, const RateFn& discount_rate,
                                   const std::function<double(double, std::span<const double>)>& z);

// Monte Carlo estimate of the adjustment
//   U = E[ integral_0^T exp(-int R_target) Z dt  +  exp(-int_0^T R_target) G* ]
// with paths driven by the chosen measure's dynamics.  G* is the problem's
// terminal_adjustment if present.
Estimate estimate_adjustment(const AdjustmentProblem& problem, Measure measure,
                             std::span<const double> x0, const McConfig& cfg, int n_threads = 1);

// P&L bleed paths under an optional real-world drift override: the paths use
// the target diffusion/correlation with `drift_override` in place of the
// target drift, while the bleed integrand and discounting stay those of the
// adjustment problem.  Primary draws only.
std::vector<PnlPath> simulate_pnl_paths(const AdjustmentProblem& problem,
                                        const std::optional<DriftFn>& drift_override,
                                        std::span<const double> x0, const McConfig& cfg,
                                        int n_threads = 1);

}  // namespace adjmc
