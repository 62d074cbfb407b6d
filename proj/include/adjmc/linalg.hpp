#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace adjmc {

using Vector = std::vector<double>;

// Dense row-major matrix.  Dimensions here are tiny (state spaces of one or
// two factors), so no attempt is made at blocking or expression templates.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Lower-triangular Cholesky factor of a symmetric positive semi-definite
// matrix.  Throws std::invalid_argument if the input is not square or not
// factorizable (after the caller-side jitter policy, see make_model).
Matrix cholesky_lower(const Matrix& a);

// In-place x := L y for lower-triangular L (n x n), y of length n.
void lower_tri_apply(const Matrix& l, std::span<const double> y, std::span<double> x);

// Frobenius-style full contraction sum_ij a_ij b_ij.
double double_dot(const Matrix& a, const Matrix& b);

}  // namespace adjmc
