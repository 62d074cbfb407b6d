#pragma once

#include <functional>
#include <span>

#include "adjmc/linalg.hpp"

namespace adjmc {

// Drift and diffusion write into caller-owned buffers so the per-step cost of
// a path simulation carries no allocations.  `out` for the diffusion is the
// row-major n x d loading matrix sigma(t, x).
using DriftFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
using DiffusionFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

// Ito diffusion dx = mu dt + sigma dW on an n-dimensional state, driven by d
// correlated Brownian factors with instantaneous correlation rho.
struct ModelDynamics {
  int n = 0;
  int d = 0;
  DriftFn drift;
  DiffusionFn diffusion;
  Matrix correlation;        // d x d
  Matrix correlation_chol;   // lower factor, filled by make_model
};

// Validates shapes and factorizes the correlation matrix: symmetric, unit
// diagonal, entries in [-1, 1], and positive semi-definite.  A semi-definite
// matrix that fails the strict factorization gets one retry with 1e-12 added
// to the diagonal; a second failure is a hard error.
ModelDynamics make_model(int n, int d, DriftFn drift, DiffusionFn diffusion, Matrix correlation);

// Value, gradient and Hessian of a smooth function of the state at one point.
// The Hessian is kept exactly symmetric: symmetrize() averages H and H^T.
struct GreekBundle {
  double value = 0.0;
  Vector grad;
  Matrix hess;

  explicit GreekBundle(int n = 0) : grad(n, 0.0), hess(n, n) {}

  void resize(int n) {
    grad.assign(n, 0.0);
    hess = Matrix(n, n);
    value = 0.0;
  }

  void symmetrize() {
    for (int i = 0; i < hess.rows(); ++i)
      for (int j = 0; j < i; ++j) {
        const double m = 0.5 * (hess(i, j) + hess(j, i));
        hess(i, j) = m;
        hess(j, i) = m;
      }
  }
};

// Oracle for the base price V: fills `out` with value/gradient/Hessian at
// (t, x).  Out-parameter form keeps MC inner loops allocation-free.
using PriceOracle = std::function<void(double t, std::span<const double> x, GreekBundle& out)>;

// Instantaneous covariation a = sigma rho sigma^T (n x n), the second-order
// coefficient of the generator.
Matrix covariation(const ModelDynamics& model, double t, std::span<const double> x);
void covariation_into(const ModelDynamics& model, double t, std::span<const double> x,
                      std::span<double> sigma_work, Matrix& out);

// Generator action L f = mu . grad f + (1/2) a : hess f.
double apply_generator(const ModelDynamics& model, double t, std::span<const double> x,
                       const GreekBundle& f);

// Difference of generator actions (L_target - L_base) f, assembled from the
// coefficient differences so that identical coefficients give exactly zero.
double generator_difference(const ModelDynamics& base, const ModelDynamics& target, double t,
                            std::span<const double> x, const GreekBundle& f);

}  // namespace adjmc
