#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "motion/errors.hpp"

namespace motion {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Double precision throughout so gradient
// checks against central differences are decisive.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

std::string shape_str(const Matrix& m);

// C = A * B. Throws ShapeError naming both shapes on a mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

struct MatmulGrads {
  Matrix da;
  Matrix db;
};

// Given dL/dC for C = A * B, returns dL/dA = dC * B^T and dL/dB = A^T * dC.
MatmulGrads matmul_backward(const Matrix& a, const Matrix& b, const Matrix& dc);

Matrix transpose(const Matrix& m);

// In-place elementwise helpers used by the network layers.
void add_inplace(Matrix& dst, const Matrix& src);
void scale_inplace(Matrix& m, double s);

// Valid 1-D cross-correlation, stride 1, no padding, no kernel flip:
// out[i] = bias + sum_u x[i+u] * w[u], i in [0, L - s]. Requires s <= L.
Vec conv1d_valid(const Vec& x, const Vec& w, double bias);

struct Conv1dGrads {
  Vec dx;
  Vec dw;
  double db = 0.0;
};

Conv1dGrads conv1d_valid_backward(const Vec& x, const Vec& w, const Vec& dy);

// Elementwise tanh and its backward rule (dx = dy * (1 - y^2), y = tanh(x)).
Matrix tanh_activation(const Matrix& x);
Matrix tanh_activation_backward(const Matrix& y, const Matrix& dy);

// Central-difference gradient of a scalar function of a flat parameter
// vector: (f(theta + eps e_i) - f(theta - eps e_i)) / (2 eps). The oracle
// every analytic backward rule in this library is checked against.
Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& theta,
                     double eps = 1e-5);

}  // namespace motion
