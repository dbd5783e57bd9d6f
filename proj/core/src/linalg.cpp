#include "motion/linalg.hpp"

#include <cmath>
#include <string>

namespace motion {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree: " + shape_str(a) + " * " +
                     shape_str(b));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) {
        crow[j] += aik * brow[j];
      }
    }
  }
  return c;
}

MatmulGrads matmul_backward(const Matrix& a, const Matrix& b, const Matrix& dc) {
  if (dc.rows() != a.rows() || dc.cols() != b.cols()) {
    throw ShapeError("matmul_backward: dC shape " + shape_str(dc) +
                     " does not match product of " + shape_str(a) + " * " + shape_str(b));
  }
  return {matmul(dc, transpose(b)), matmul(transpose(a), dc)};
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      t(j, i) = m(i, j);
    }
  }
  return t;
}

void add_inplace(Matrix& dst, const Matrix& src) {
  if (!dst.same_shape(src)) {
    throw ShapeError("add_inplace: shape mismatch: " + shape_str(dst) + " vs " +
                     shape_str(src));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

void scale_inplace(Matrix& m, double s) {
  for (double& v : m.data()) v *= s;
}

Vec conv1d_valid(const Vec& x, const Vec& w, double bias) {
  if (x.empty() || w.empty()) {
    throw ShapeError("conv1d_valid: empty input (len " + std::to_string(x.size()) +
                     ") or kernel (len " + std::to_string(w.size()) + ")");
  }
  if (w.size() > x.size()) {
    throw ShapeError("conv1d_valid: kernel size " + std::to_string(w.size()) +
                     " exceeds input length " + std::to_string(x.size()));
  }
  const std::size_t out_len = x.size() - w.size() + 1;
  Vec out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    double acc = bias;
    for (std::size_t u = 0; u < w.size(); ++u) {
      acc += x[i + u] * w[u];
    }
    out[i] = acc;
  }
  return out;
}

Conv1dGrads conv1d_valid_backward(const Vec& x, const Vec& w, const Vec& dy) {
  if (w.size() > x.size() || dy.size() != x.size() - w.size() + 1) {
    throw ShapeError("conv1d_valid_backward: dy length " + std::to_string(dy.size()) +
                     " does not match valid output length for input " +
                     std::to_string(x.size()) + ", kernel " + std::to_string(w.size()));
  }
  Conv1dGrads g;
  g.dx.assign(x.size(), 0.0);
  g.dw.assign(w.size(), 0.0);
  for (std::size_t i = 0; i < dy.size(); ++i) {
    const double d = dy[i];
    g.db += d;
    for (std::size_t u = 0; u < w.size(); ++u) {
      g.dw[u] += d * x[i + u];
      g.dx[i + u] += d * w[u];
    }
  }
  return g;
}

Matrix tanh_activation(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y.data()[i] = std::tanh(x.data()[i]);
  }
  return y;
}

Matrix tanh_activation_backward(const Matrix& y, const Matrix& dy) {
  if (!y.same_shape(dy)) {
    throw ShapeError("tanh_activation_backward: shape mismatch: " + shape_str(y) +
                     " vs " + shape_str(dy));
  }
  Matrix dx(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double yi = y.data()[i];
    dx.data()[i] = dy.data()[i] * (1.0 - yi * yi);
  }
  return dx;
}

Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& theta,
                     double eps) {
  if (!(eps > 0.0)) {
    throw NumericError("finite_diff_grad: eps must be > 0, got " + std::to_string(eps));
  }
  Vec grad(theta.size());
  Vec probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + eps;
    const double fp = f(probe);
    probe[i] = theta[i] - eps;
    const double fm = f(probe);
    probe[i] = theta[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: non-finite function value at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * eps);
  }
  return grad;
}

}  // namespace motion
