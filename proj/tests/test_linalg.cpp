#include <cmath>
#include <random>

#include <doctest.h>

#include "motion/errors.hpp"
#include "motion/linalg.hpp"
#include "test_helpers.hpp"

using namespace motion;
using testutil::random_matrix;
using testutil::random_vec;

namespace {

// Independent oracle: plain triple loop, no blocking or reordering.
Matrix matmul_naive(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

// Independent oracle for conv1d_valid: literal definition, one output at a time.
Vec conv_naive(const Vec& x, const Vec& w, double bias) {
  Vec out(x.size() - w.size() + 1, bias);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t u = 0; u < w.size(); ++u) out[i] += x[i + u] * w[u];
  return out;
}

// Independent oracle for tanh: Lambert's continued fraction
// tanh(x) = x / (1 + x^2 / (3 + x^2 / (5 + ...))), evaluated bottom-up.
// Converges to machine precision well past |x| = 10 at this depth.
double tanh_cf(double x) {
  const double x2 = x * x;
  double f = 2.0 * 60.0 - 1.0;
  for (int k = 59; k >= 1; --k) f = (2.0 * k - 1.0) + x2 / f;
  return x / f;
}

}  // namespace

TEST_CASE("matrix basics") {
  Matrix m(2, 3);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.size() == 6);
  m(1, 2) = 5.0;
  CHECK(m.data()[5] == 5.0);  // row-major layout
  CHECK(m.row(1)[2] == 5.0);

  Matrix id = Matrix::identity(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(id(i, j) == (i == j ? 1.0 : 0.0));

  CHECK(m.same_shape(Matrix(2, 3)));
  CHECK_FALSE(m.same_shape(Matrix(3, 2)));

  Matrix a(2, 2, 1.0);
  Matrix b(2, 2, 1.0);
  CHECK(a == b);
  b(0, 0) = 2.0;
  CHECK_FALSE(a == b);

  CHECK(shape_str(m) == "2x3");
}

TEST_CASE("matmul matches the triple-loop oracle on random shapes") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> dim(1, 12);
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t n = dim(rng), k = dim(rng), m = dim(rng);
    Matrix a = random_matrix(n, k, rng);
    Matrix b = random_matrix(k, m, rng);
    Matrix got = matmul(a, b);
    Matrix want = matmul_naive(a, b);
    REQUIRE(got.same_shape(want));
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("matmul hand-checked 2x2") {
  Matrix a(2, 2);
  a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
  Matrix b(2, 2);
  b(0, 0) = 5; b(0, 1) = 6; b(1, 0) = 7; b(1, 1) = 8;
  Matrix c = matmul(a, b);
  CHECK(c(0, 0) == 19.0);
  CHECK(c(0, 1) == 22.0);
  CHECK(c(1, 0) == 43.0);
  CHECK(c(1, 1) == 50.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
  try {
    matmul(Matrix(2, 3), Matrix(4, 5));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x5") != std::string::npos);
  }
}

TEST_CASE("matmul_backward matches finite differences") {
  // Scalar head L = sum(C .* R) so dL/dC = R; check dA and dB numerically.
  std::mt19937_64 rng(2);
  Matrix a = random_matrix(3, 4, rng);
  Matrix b = random_matrix(4, 2, rng);
  Matrix r = random_matrix(3, 2, rng);

  MatmulGrads grads = matmul_backward(a, b, r);

  auto loss_a = [&](const Vec& theta) {
    Matrix at = a;
    at.data() = theta;
    return testutil::dot(matmul(at, b).data(), r.data());
  };
  Vec num_a = finite_diff_grad(loss_a, a.data());
  for (std::size_t i = 0; i < num_a.size(); ++i)
    CHECK(grads.da.data()[i] == doctest::Approx(num_a[i]).epsilon(1e-7));

  auto loss_b = [&](const Vec& theta) {
    Matrix bt = b;
    bt.data() = theta;
    return testutil::dot(matmul(a, bt).data(), r.data());
  };
  Vec num_b = finite_diff_grad(loss_b, b.data());
  for (std::size_t i = 0; i < num_b.size(); ++i)
    CHECK(grads.db.data()[i] == doctest::Approx(num_b[i]).epsilon(1e-7));
}

TEST_CASE("transpose is an involution and moves entries correctly") {
  std::mt19937_64 rng(3);
  Matrix m = random_matrix(3, 5, rng);
  Matrix t = transpose(m);
  REQUIRE(t.rows() == 5);
  REQUIRE(t.cols() == 3);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) CHECK(t(j, i) == m(i, j));
  CHECK(transpose(t) == m);
}

TEST_CASE("add_inplace and scale_inplace") {
  Matrix a(2, 2, 1.0);
  Matrix b(2, 2, 2.5);
  add_inplace(a, b);
  for (double v : a.data()) CHECK(v == 3.5);
  scale_inplace(a, -2.0);
  for (double v : a.data()) CHECK(v == -7.0);
  CHECK_THROWS_AS(add_inplace(a, Matrix(3, 2)), ShapeError);
}

TEST_CASE("conv1d_valid hand case") {
  Vec y = conv1d_valid({1, 2, 3}, {1, 1}, 0.0);
  REQUIRE(y.size() == 2);
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 5.0);

  // Bias shifts every output; size-1 kernel scales pointwise.
  Vec z = conv1d_valid({1, 2, 3}, {2}, 0.5);
  REQUIRE(z.size() == 3);
  CHECK(z[0] == 2.5);
  CHECK(z[1] == 4.5);
  CHECK(z[2] == 6.5);
}

TEST_CASE("conv1d_valid matches naive sliding window on random inputs") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> len(1, 20);
  std::uniform_real_distribution<double> bias(-1.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t lx = len(rng);
    std::uniform_int_distribution<std::size_t> klen(1, lx);
    std::size_t lw = klen(rng);
    Vec x = random_vec(lx, rng);
    Vec w = random_vec(lw, rng);
    double b = bias(rng);
    Vec got = conv1d_valid(x, w, b);
    Vec want = conv_naive(x, w, b);
    REQUIRE(got.size() == lx - lw + 1);
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv1d_valid rejects kernels longer than the input") {
  CHECK_THROWS_AS(conv1d_valid({1.0, 2.0}, {1.0, 1.0, 1.0}, 0.0), ShapeError);
  CHECK_THROWS_AS(conv1d_valid({}, {1.0}, 0.0), ShapeError);
  CHECK_THROWS_AS(conv1d_valid({1.0}, {}, 0.0), ShapeError);
}

TEST_CASE("conv1d_valid_backward matches finite differences") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    std::uniform_int_distribution<std::size_t> len(2, 12);
    std::size_t lx = len(rng);
    std::uniform_int_distribution<std::size_t> klen(1, lx);
    std::size_t lw = klen(rng);
    Vec x = random_vec(lx, rng);
    Vec w = random_vec(lw, rng);
    double b = 0.3;
    Vec r = random_vec(lx - lw + 1, rng);

    Conv1dGrads grads = conv1d_valid_backward(x, w, r);

    Vec num_x = finite_diff_grad(
        [&](const Vec& t) { return testutil::dot(conv1d_valid(t, w, b), r); }, x);
    Vec num_w = finite_diff_grad(
        [&](const Vec& t) { return testutil::dot(conv1d_valid(x, t, b), r); }, w);
    Vec num_b = finite_diff_grad(
        [&](const Vec& t) { return testutil::dot(conv1d_valid(x, w, t[0]), r); }, {b});

    REQUIRE(grads.dx.size() == x.size());
    REQUIRE(grads.dw.size() == w.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(grads.dx[i] == doctest::Approx(num_x[i]).epsilon(1e-6));
    for (std::size_t i = 0; i < w.size(); ++i)
      CHECK(grads.dw[i] == doctest::Approx(num_w[i]).epsilon(1e-6));
    CHECK(grads.db == doctest::Approx(num_b[0]).epsilon(1e-6));
  }
}

TEST_CASE("tanh_activation matches the continued-fraction oracle") {
  std::mt19937_64 rng(6);
  Matrix x = random_matrix(4, 7, rng, -8.0, 8.0);
  Matrix y = tanh_activation(x);
  REQUIRE(y.same_shape(x));
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(y.data()[i] == doctest::Approx(tanh_cf(x.data()[i])).epsilon(1e-14));

  // Saturation tails, checked against the exp identity rather than std::tanh.
  Matrix big(1, 2);
  big(0, 0) = 20.0;
  big(0, 1) = -20.0;
  Matrix yb = tanh_activation(big);
  CHECK(yb(0, 0) == doctest::Approx(1.0 - 2.0 / (std::exp(40.0) + 1.0)).epsilon(1e-15));
  CHECK(yb(0, 1) == doctest::Approx(-(1.0 - 2.0 / (std::exp(40.0) + 1.0))).epsilon(1e-15));
}

TEST_CASE("tanh_activation_backward matches finite differences") {
  std::mt19937_64 rng(7);
  Matrix x = random_matrix(3, 4, rng, -2.0, 2.0);
  Matrix r = random_matrix(3, 4, rng);
  Matrix y = tanh_activation(x);
  Matrix dx = tanh_activation_backward(y, r);

  auto loss = [&](const Vec& theta) {
    Matrix xt = x;
    xt.data() = theta;
    return testutil::dot(tanh_activation(xt).data(), r.data());
  };
  Vec num = finite_diff_grad(loss, x.data());
  for (std::size_t i = 0; i < num.size(); ++i)
    CHECK(dx.data()[i] == doctest::Approx(num[i]).epsilon(1e-7));
}

TEST_CASE("finite_diff_grad is near-exact on a quadratic") {
  // f(theta) = sum a_i theta_i^2 has gradient 2 a_i theta_i; central
  // differences are exact on quadratics up to rounding.
  std::mt19937_64 rng(8);
  Vec a = random_vec(6, rng, 0.5, 2.0);
  Vec theta = random_vec(6, rng, -1.0, 1.0);
  auto f = [&](const Vec& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += a[i] * t[i] * t[i];
    return s;
  };
  Vec g = finite_diff_grad(f, theta);
  for (std::size_t i = 0; i < theta.size(); ++i)
    CHECK(g[i] == doctest::Approx(2.0 * a[i] * theta[i]).epsilon(1e-9));
}

TEST_CASE("finite_diff_grad rejects bad eps and non-finite evaluations") {
  auto f = [](const Vec& t) { return t[0]; };
  CHECK_THROWS_AS(finite_diff_grad(f, {1.0}, 0.0), NumericError);
  CHECK_THROWS_AS(finite_diff_grad(f, {1.0}, -1e-5), NumericError);
  auto nan_f = [](const Vec&) { return std::nan(""); };
  CHECK_THROWS_AS(finite_diff_grad(nan_f, {1.0}), NumericError);
}
