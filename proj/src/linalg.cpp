#include "adjmc/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace adjmc {

Matrix cholesky_lower(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("cholesky_lower: matrix not square");
  const int n = a.rows();
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (!(s > 0.0)) throw std::invalid_argument("cholesky_lower: matrix not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

void lower_tri_apply(const Matrix& l, std::span<const double> y, std::span<double> x) {
  const int n = l.rows();
  for (int i = n - 1; i >= 0; --i) {
    double s = 0.0;
    for (int j = 0; j <= i; ++j) s += l(i, j) * y[j];
    x[i] = s;
  }
}

double double_dot(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("double_dot: shape mismatch");
  double s = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t k = 0; k < da.size(); ++k) s += da[k] * db[k];
  return s;
}

}  // namespace adjmc
