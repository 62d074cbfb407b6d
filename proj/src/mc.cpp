#include "adjmc/mc.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace adjmc {

Estimate summarize(std::span<const double> draws) {
  const std::int64_t n = static_cast<std::int64_t>(draws.size());
  if (n == 0) throw std::invalid_argument("summarize: no draws");
  double sum = 0.0;
  for (double v : draws) sum += v;
  const double mean = sum / static_cast<double>(n);
  if (n == 1) return {mean, 0.0, n};
  double ss = 0.0;
  for (double v : draws) {
    const double c = v - mean;
    ss += c * c;
  }
  const double var = ss / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

namespace detail {

int resolve_threads(int n_threads) {
  if (n_threads > 0) return n_threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for_chunks(std::int64_t n, int n_threads,
                         const std::function<void(std::int64_t, std::int64_t)>& body) {
  const int workers = static_cast<int>(
      std::min<std::int64_t>(resolve_threads(n_threads), std::max<std::int64_t>(n, 1)));
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::mutex err_mutex;
  std::exception_ptr first_error;
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t begin = std::min<std::int64_t>(w * chunk, n);
    const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
    pool.emplace_back([&, begin, end] {
      try {
        if (begin < end) body(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

PathEngine::PathEngine(const ModelDynamics& model, std::span<const double> x0, double horizon,
                       const McConfig& cfg)
    : model_(&model), x0_(x0.begin(), x0.end()), horizon_(horizon), cfg_(cfg), stream_(cfg.seed) {
  if (static_cast<int>(x0.size()) != model.n)
    throw std::invalid_argument("PathEngine: x0 size != state dimension");
  if (!(horizon > 0.0)) throw std::invalid_argument("PathEngine: horizon must be positive");
  if (cfg.n_paths < 1 || cfg.n_steps < 1)
    throw std::invalid_argument("PathEngine: n_paths and n_steps must be >= 1");
  if (cfg.n_steps >= (std::int64_t{1} << 32))
    throw std::invalid_argument("PathEngine: n_steps exceeds the RNG counter layout");
  dt_ = horizon / static_cast<double>(cfg.n_steps);
}

std::vector<Path> simulate_paths(const ModelDynamics& model, std::span<const double> x0,
                                 double horizon, const McConfig& cfg, int n_threads) {
  PathEngine engine(model, x0, horizon, cfg);
  const std::int64_t n_nodes = cfg.n_steps + 1;
  std::vector<Path> out(static_cast<std::size_t>(cfg.n_paths));
  detail::parallel_for_chunks(cfg.n_paths, n_threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t p = begin; p < end; ++p) {
      Path& path = out[static_cast<std::size_t>(p)];
      path.n = model.n;
      path.times.resize(static_cast<std::size_t>(n_nodes));
      path.states.resize(static_cast<std::size_t>(n_nodes) * model.n);
      engine.walk(p, false, [&](std::int64_t k, double t, std::span<const double> x) {
        path.times[static_cast<std::size_t>(k)] = t;
        std::copy(x.begin(), x.end(), path.states.begin() + static_cast<std::size_t>(k) * model.n);
      });
    }
  });
  return out;
}

PnlPath integrate_discounted_bleed(
    const Path& path, const RateFn& discount_rate,
    const std::function<double(double, std::span<const double>)>& z) {
  const std::int64_t n_nodes = static_cast<std::int64_t>(path.times.size());
  if (n_nodes < 2) throw std::invalid_argument("integrate_discounted_bleed: path too short");
  const std::int64_t n_steps = n_nodes - 1;
  const double dt = (path.times.back() - path.times.front()) / static_cast<double>(n_steps);
  detail::DiscountedIntegrator acc(dt, n_steps);
  PnlPath out;
  out.times = path.times;
  out.cum_pnl.resize(static_cast<std::size_t>(n_nodes));
  for (std::int64_t k = 0; k < n_nodes; ++k) {
    const double t = path.times[static_cast<std::size_t>(k)];
    const auto x = path.state(k);
    const double zv = z(t, x);
    if (!std::isfinite(zv))
      throw SimulationError(-1, k, "non-finite bleed value in path integral");
    acc.add_node(k, zv, discount_rate ? discount_rate(t, x) : 0.0);
    out.cum_pnl[static_cast<std::size_t>(k)] = acc.total();
  }
  return out;
}

namespace {

// Shared driver for the estimator and the P&L ensembles: walks every path of
// `dynamics`, integrating the problem's discounted bleed, and optionally
// records the running integral at each node.
struct BleedRun {
  const AdjustmentProblem* problem;
  const ModelDynamics* dynamics;
  std::span<const double> x0;
  McConfig cfg;
  int n_threads;

  // record == nullptr: per-path totals only (with terminal adjustment).
  // record != nullptr: fills (*record)[p] with the cumulative integral and
  // skips the terminal adjustment (it is a discrete payment, not bleed).
  std::vector<double> run(std::vector<PnlPath>* record) const {
    validate(*problem);
    PathEngine engine(*dynamics, x0, problem->horizon(), cfg);
    const std::int64_t n_steps = cfg.n_steps;
    const RateFn& r_target = problem->target.cashflows.discount_rate;
    std::vector<double> totals(static_cast<std::size_t>(cfg.n_paths));
    detail::parallel_for_chunks(cfg.n_paths, n_threads, [&](std::int64_t begin, std::int64_t end) {
      BleedFunction bleed_fn(*problem);
      detail::DiscountedIntegrator acc(engine.dt(), n_steps);
      for (std::int64_t p = begin; p < end; ++p) {
        PnlPath* rec = record ? &(*record)[static_cast<std::size_t>(p)] : nullptr;
        if (rec) {
          rec->times.resize(static_cast<std::size_t>(n_steps) + 1);
          rec->cum_pnl.resize(static_cast<std::size_t>(n_steps) + 1);
        }
        auto one_leg = [&](bool flip) {
          acc.reset();
          double terminal = 0.0;
          engine.walk(p, flip, [&](std::int64_t k, double t, std::span<const double> x) {
            double zv;
            try {
              zv = bleed_fn(t, x);
            } catch (const std::exception& e) {
              throw SimulationError(p, k, std::string("oracle evaluation failed: ") + e.what());
            }
            if (!std::isfinite(zv)) throw SimulationError(p, k, "non-finite bleed value");
            acc.add_node(k, zv, r_target ? r_target(t, x) : 0.0);
            if (rec) {
              rec->times[static_cast<std::size_t>(k)] = t;
              rec->cum_pnl[static_cast<std::size_t>(k)] = acc.total();
            }
            if (k == n_steps && problem->terminal_adjustment && !rec)
              terminal = acc.node_discount() * problem->terminal_adjustment(x);
          });
          return acc.total() + terminal;
        };
        double value = one_leg(false);
        if (cfg.antithetic && !record) value = 0.5 * (value + one_leg(true));
        totals[static_cast<std::size_t>(p)] = value;
      }
    });
    return totals;
  }
};

}  // namespace

Estimate estimate_adjustment(const AdjustmentProblem& problem, Measure measure,
                             std::span<const double> x0, const McConfig& cfg, int n_threads) {
  const ModelDynamics& dynamics =
      measure == Measure::Target ? problem.target.model : problem.base.model;
  BleedRun run{&problem, &dynamics, x0, cfg, n_threads};
  const std::vector<double> totals = run.run(nullptr);
  return summarize(totals);
}

std::vector<PnlPath> simulate_pnl_paths(const AdjustmentProblem& problem,
                                        const std::optional<DriftFn>& drift_override,
                                        std::span<const double> x0, const McConfig& cfg,
                                        int n_threads) {
  ModelDynamics dynamics = problem.target.model;
  if (drift_override) dynamics.drift = *drift_override;
  std::vector<PnlPath> paths(static_cast<std::size_t>(cfg.n_paths));
  BleedRun run{&problem, &dynamics, x0, cfg, n_threads};
  run.run(&paths);
  return paths;
}

}  // namespace adjmc
