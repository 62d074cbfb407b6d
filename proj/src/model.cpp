#include "adjmc/model.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace adjmc {

namespace {

Matrix factor_correlation(const Matrix& rho) {
  try {
    return cholesky_lower(rho);
  } catch (const std::invalid_argument&) {
    Matrix jittered = rho;
    for (int i = 0; i < jittered.rows(); ++i) jittered(i, i) += 1e-12;
    return cholesky_lower(jittered);  // second failure propagates
  }
}

}  // namespace

ModelDynamics make_model(int n, int d, DriftFn drift, DiffusionFn diffusion, Matrix correlation) {
  if (n <= 0 || d <= 0) throw std::invalid_argument("make_model: dimensions must be positive");
  if (!drift || !diffusion) throw std::invalid_argument("make_model: missing coefficient function");
  if (correlation.rows() != d || correlation.cols() != d)
    throw std::invalid_argument("make_model: correlation must be d x d");
  for (int i = 0; i < d; ++i) {
    if (correlation(i, i) != 1.0)
      throw std::invalid_argument("make_model: correlation diagonal must be 1");
    for (int j = 0; j < d; ++j) {
      if (correlation(i, j) != correlation(j, i))
        throw std::invalid_argument("make_model: correlation not symmetric");
      if (std::fabs(correlation(i, j)) > 1.0)
        throw std::invalid_argument("make_model: correlation entry outside [-1, 1]");
    }
  }
  ModelDynamics m;
  m.n = n;
  m.d = d;
  m.drift = std::move(drift);
  m.diffusion = std::move(diffusion);
  m.correlation_chol = factor_correlation(correlation);
  m.correlation = std::move(correlation);
  return m;
}

void covariation_into(const ModelDynamics& model, double t, std::span<const double> x,
                      std::span<double> sigma_work, Matrix& out) {
  const int n = model.n;
  const int d = model.d;
  if (static_cast<int>(x.size()) != n) throw std::invalid_argument("covariation: state size != n");
  if (static_cast<int>(sigma_work.size()) < n * d)
    throw std::invalid_argument("covariation: workspace too small");
  if (out.rows() != n || out.cols() != n) out = Matrix(n, n);
  model.diffusion(t, x, sigma_work.subspan(0, static_cast<std::size_t>(n) * d));
  const auto sig = [&](int i, int k) { return sigma_work[static_cast<std::size_t>(i) * d + k]; };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) s += model.correlation(k, l) * sig(i, k) * sig(j, l);
      out(i, j) = s;
      out(j, i) = s;
    }
  }
}

Matrix covariation(const ModelDynamics& model, double t, std::span<const double> x) {
  Matrix out(model.n, model.n);
  std::vector<double> work(static_cast<std::size_t>(model.n) * model.d);
  covariation_into(model, t, x, work, out);
  return out;
}

double apply_generator(const ModelDynamics& model, double t, std::span<const double> x,
                       const GreekBundle& f) {
  const int n = model.n;
  if (static_cast<int>(f.grad.size()) != n || f.hess.rows() != n || f.hess.cols() != n)
    throw std::invalid_argument("apply_generator: bundle dimension != n");
  std::vector<double> mu(n);
  model.drift(t, x, mu);
  const Matrix a = covariation(model, t, x);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += mu[i] * f.grad[i];
  return s + 0.5 * double_dot(a, f.hess);
}

double generator_difference(const ModelDynamics& base, const ModelDynamics& target, double t,
                            std::span<const double> x, const GreekBundle& f) {
  if (base.n != target.n) throw std::invalid_argument("generator_difference: state dims differ");
  const int n = base.n;
  if (static_cast<int>(f.grad.size()) != n || f.hess.rows() != n || f.hess.cols() != n)
    throw std::invalid_argument("generator_difference: bundle dimension != n");
  std::vector<double> mu_base(n), mu_target(n);
  base.drift(t, x, mu_base);
  target.drift(t, x, mu_target);
  const Matrix a_base = covariation(base, t, x);
  const Matrix a_target = covariation(target, t, x);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (mu_target[i] - mu_base[i]) * f.grad[i];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += 0.5 * (a_target(i, j) - a_base(i, j)) * f.hess(i, j);
  return s;
}

}  // namespace adjmc
