#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "phid/gradcheck.hpp"
#include "phid/rng.hpp"
#include "phid/tape.hpp"

using namespace phid;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(lo, hi);
  return m;
}

double swish_scalar(double x) { return x / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("d(x^2)/dx at 3 is 6") {
  Tape t;
  Var x = t.leaf(Matrix::scalar(3.0));
  Var y = square(x);
  std::vector<Var> wrt{x};
  auto g = t.backward(y, wrt);
  CHECK(g[0].scalar_value() == doctest::Approx(6.0));
}

TEST_CASE("d sum(W v)/dW has outer-product structure") {
  Tape t;
  Matrix W0 = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  Matrix v0 = Matrix::from_rows({{0.5}, {-2.0}});
  Var W = t.leaf(W0);
  Var v = t.leaf(v0);
  Var y = full_sum(matmul(W, v));
  std::vector<Var> wrt{W};
  auto g = t.backward(y, wrt);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) CHECK(g[0](i, j) == doctest::Approx(v0(j, 0)));
}

TEST_CASE("three-layer MLP-style loss gradients match finite differences") {
  Rng rng(42);
  Matrix W1 = random_matrix(4, 6, rng);
  Matrix W2 = random_matrix(6, 6, rng);
  Matrix W3 = random_matrix(6, 1, rng);
  Matrix x = random_matrix(3, 4, rng);
  Matrix target = random_matrix(3, 1, rng);

  ScalarBuilder build = [&](Tape& t, const std::vector<Var>& p) {
    Var h = t.constant(x);
    h = swish(matmul(h, p[0]));
    h = swish(matmul(h, p[1]));
    Var out = matmul(h, p[2]);
    Var d = sub(out, t.constant(target));
    return mean_all(square(d));
  };
  double err = finite_diff_check(build, {&W1, &W2, &W3}, 1e-5);
  CHECK(err <= 1e-5);
}

TEST_CASE("input_gradient of a quadratic form is Qx") {
  Matrix Q = Matrix::from_rows({{2.0, 0.5}, {0.5, 1.0}});
  Matrix x0 = Matrix::from_rows({{0.7, -1.3}});
  Tape t;
  Var x = t.leaf(x0);
  Var g = input_gradient(
      t,
      [&](Tape& tt, Var xv) {
        Var xq = matmul(xv, tt.constant(Q));
        return scale_add(full_sum(mul(xq, xv)), 0.5, 0.0);
      },
      x);
  CHECK(g.value()(0, 0) == doctest::Approx(Q(0, 0) * x0[0] + Q(0, 1) * x0[1]));
  CHECK(g.value()(0, 1) == doctest::Approx(Q(1, 0) * x0[0] + Q(1, 1) * x0[1]));
}

TEST_CASE("input_gradient of sum of swish at zero gives 0.5 per component") {
  Tape t;
  Var x = t.leaf(Matrix(1, 3, 0.0));
  Var g = input_gradient(t, [](Tape&, Var xv) { return full_sum(swish(xv)); }, x);
  for (int j = 0; j < 3; ++j) CHECK(g.value()(0, j) == doctest::Approx(0.5));
}

TEST_CASE("input_gradient rejects non-scalar outputs") {
  Tape t;
  Var x = t.leaf(Matrix(1, 3, 0.0));
  CHECK_THROWS_AS(input_gradient(t, [](Tape&, Var xv) { return swish(xv); }, x), AutodiffError);
}

TEST_CASE("gradient through an inner input-gradient matches finite differences") {
  // loss(theta) = || d/dx H_theta(x) - t ||^2 with H a tiny two-layer net.
  Rng rng(99);
  Matrix W1 = random_matrix(3, 5, rng);
  Matrix W2 = random_matrix(5, 1, rng);
  Matrix x0 = random_matrix(1, 3, rng);
  Matrix tgt = random_matrix(1, 3, rng);

  ScalarBuilder build = [&](Tape& t, const std::vector<Var>& p) {
    Var x = t.constant(x0);
    Var h = full_sum(matmul(swish(matmul(x, p[0])), p[1]));
    std::vector<Var> wrt{x};
    Var gx = t.gradient(h, wrt)[0];
    Var d = sub(gx, t.constant(tgt));
    return full_sum(square(d));
  };
  double err = finite_diff_check(build, {&W1, &W2}, 1e-5);
  CHECK(err <= 1e-4);
}

TEST_CASE("finite_diff_check on a linear map is exact to machine noise") {
  Rng rng(1);
  Matrix W = random_matrix(4, 3, rng);
  Matrix c = random_matrix(1, 4, rng);
  ScalarBuilder build = [&](Tape& t, const std::vector<Var>& p) {
    return full_sum(matmul(t.constant(c), p[0]));
  };
  CHECK(finite_diff_check(build, {&W}, 1e-5) <= 1e-8);
}

TEST_CASE("finite_diff_check on a swish chain of depth 3") {
  Rng rng(2);
  Matrix w = random_matrix(1, 4, rng);
  ScalarBuilder build = [&](Tape& t, const std::vector<Var>& p) {
    (void)t;
    return full_sum(swish(swish(swish(p[0]))));
  };
  CHECK(finite_diff_check(build, {&w}, 1e-5) <= 1e-5);
}

// Draw spline inputs away from the knots: a cubic basis at the far edge of
// its support takes values ~distance^3, which central differences cannot
// resolve against floating-point rounding.
Matrix random_off_knot(int r, int c, Rng& rng, const kernels::SplineGrid& g) {
  Matrix m(r, c);
  for (size_t i = 0; i < m.size(); ++i) {
    double x = rng.uniform(g.t0 + 0.1, g.t_end() - 0.1);
    double frac = (x - g.t0) / g.h;
    double d = frac - std::floor(frac);
    if (d < 0.1) x += 0.1 * g.h;
    if (d > 0.9) x -= 0.1 * g.h;
    m[i] = x;
  }
  return m;
}

TEST_CASE("finite_diff_check through a spline-basis layer") {
  kernels::SplineGrid grid;
  Rng rng(8);
  Matrix x = random_off_knot(2, 3, rng, grid);
  Matrix W = random_matrix(3 * grid.n_basis(), 1, rng);
  ScalarBuilder build = [&](Tape& t, const std::vector<Var>& p) {
    Var feats = spline_basis(t.leaf(x), grid, 0);
    return full_sum(matmul(feats, p[0]));
  };
  CHECK(finite_diff_check(build, {&W}, 1e-5) <= 1e-4);

  // and through the input as well
  ScalarBuilder build_x = [&](Tape& t, const std::vector<Var>& p) {
    Var feats = spline_basis(p[0], grid, 0);
    return full_sum(matmul(feats, t.constant(W)));
  };
  CHECK(finite_diff_check(build_x, {&x}, 1e-5) <= 1e-4);
}

TEST_CASE("every primitive passes the finite-difference property") {
  Rng rng(1234);
  kernels::SplineGrid grid;
  const int instances = 100;
  for (int inst = 0; inst < instances; ++inst) {
    Matrix A = random_matrix(3, 4, rng, 0.2, 1.5);  // positive: safe for pow
    Matrix B = random_matrix(3, 4, rng, 0.2, 1.5);
    Matrix Bc = random_matrix(3, 1, rng, 0.2, 1.5);
    Matrix Br = random_matrix(1, 4, rng, 0.2, 1.5);
    Matrix M = random_matrix(4, 2, rng);
    Matrix Th = random_matrix(3, 6, rng);
    Matrix V3 = random_matrix(3, 3, rng);
    Matrix V2 = random_matrix(3, 2, rng);
    Matrix Xs = random_off_knot(2, 2, rng, grid);

    auto check = [&](const ScalarBuilder& b, std::vector<Matrix*> ps, double tol = 1e-4) {
      CHECK(finite_diff_check(b, ps, 1e-6) <= tol);
    };

    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(add(p[0], t.constant(B))); },
          {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(sub(p[0], p[1])); }, {&A, &B});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(mul(p[0], p[1])); }, {&A, &B});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(mul(p[0], p[1])); }, {&A, &Bc});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(add(p[0], p[1])); }, {&A, &Br});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(scale_add(p[0], -1.7, 0.3)); },
          {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(matmul(p[0], p[1])); },
          {&A, &M});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(transpose(p[0])); }, {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(square(row_sum(p[0]))); },
          {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(square(col_sum(p[0]))); },
          {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return square(full_sum(p[0])); }, {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(pow_const(p[0], 1.5)); }, {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(phid::exp(p[0])); }, {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(phid::abs(p[0])); }, {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(sigmoid(p[0])); }, {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(square(slice_cols(p[0], 1, 3))); },
          {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(square(pad_cols(p[0], 6, 1))); },
          {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(square(repeat_rows(p[0], 3))); },
          {&Br});
    check([&](Tape& t, const std::vector<Var>& p) {
      return full_sum(square(block_repeat_cols(p[0], 2)));
    }, {&A});
    check([&](Tape& t, const std::vector<Var>& p) { return full_sum(square(block_col_sum(p[0], 2))); },
          {&A});
    check([&](Tape& t, const std::vector<Var>& p) {
      return full_sum(square(spline_basis(p[0], grid, 0)));
    }, {&Xs});
    check([&](Tape& t, const std::vector<Var>& p) {
      return full_sum(square(batch_matvec(p[0], p[1], 2, 3)));
    }, {&Th, &V3});
    check([&](Tape& t, const std::vector<Var>& p) {
      return full_sum(square(batch_matvec_t(p[0], p[1], 2, 3)));
    }, {&Th, &V2});
    check([&](Tape& t, const std::vector<Var>& p) {
      return full_sum(square(batch_outer(p[0], p[1], 2, 3)));
    }, {&V2, &V3});
  }
}

TEST_CASE("backward is deterministic and leaves the graph unchanged") {
  Rng rng(77);
  Matrix W1 = random_matrix(3, 4, rng);
  Matrix W2 = random_matrix(4, 1, rng);
  Matrix x = random_matrix(2, 3, rng);

  auto run = [&]() {
    Tape t;
    Var w1 = t.leaf(W1);
    Var w2 = t.leaf(W2);
    Var out = mean_all(square(matmul(swish(matmul(t.constant(x), w1)), w2)));
    size_t before = t.size();
    std::vector<Var> wrt{w1, w2};
    auto g = t.backward(out, wrt);
    CHECK(t.size() == before);
    auto g2 = t.backward(out, wrt);
    for (size_t i = 0; i < g.size(); ++i)
      for (size_t j = 0; j < g[i].size(); ++j) CHECK(g[i][j] == g2[i][j]);
    return g;
  };
  auto ga = run();
  auto gb = run();
  for (size_t i = 0; i < ga.size(); ++i)
    for (size_t j = 0; j < ga[i].size(); ++j) CHECK(ga[i][j] == gb[i][j]);
}

TEST_CASE("non-scalar root and NaN forward values are rejected") {
  Tape t;
  Var x = t.leaf(Matrix(2, 2, 1.0));
  std::vector<Var> wrt{x};
  CHECK_THROWS_AS(t.backward(square(x), wrt), AutodiffError);

  Matrix bad(1, 2, 0.0);
  bad[1] = std::nan("");
  Tape t2;
  Var y = t2.leaf(bad);
  std::vector<Var> wrt2{y};
  try {
    t2.backward(full_sum(y), wrt2);
    CHECK(false);
  } catch (const AutodiffError& e) {
    CHECK(std::string(e.what()).find("node") != std::string::npos);
  }
}

TEST_CASE("unused parameters get zero gradients") {
  Tape t;
  Var used = t.leaf(Matrix::scalar(2.0));
  Var unused = t.leaf(Matrix(2, 3, 1.0));
  std::vector<Var> wrt{used, unused};
  auto g = t.backward(square(used), wrt);
  CHECK(g[0].scalar_value() == doctest::Approx(4.0));
  CHECK(g[1].rows() == 2);
  CHECK(g[1].cols() == 3);
  CHECK(g[1].max_abs() == 0.0);
}

TEST_CASE("nested gradient matches a pure finite-difference Hessian-action oracle") {
  // Tiny net: H(x) = w2 . swish(W1 x), 8 parameters total.
  Rng rng(5);
  Matrix W1 = random_matrix(2, 3, rng);
  Matrix w2 = random_matrix(3, 1, rng);
  Matrix x0 = random_matrix(1, 2, rng);
  Matrix tgt = random_matrix(1, 2, rng);

  auto h_plain = [&](const Matrix& a, const Matrix& b, const Matrix& xin) {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) {
      double z = 0.0;
      for (int i = 0; i < 2; ++i) z += xin(0, i) * a(i, j);
      acc += swish_scalar(z) * b(j, 0);
    }
    return acc;
  };
  // d/dx H via central differences, then the scalar loss.
  auto loss_fd = [&](const Matrix& a, const Matrix& b) {
    const double ex = 1e-5;
    double loss = 0.0;
    for (int i = 0; i < 2; ++i) {
      Matrix xp = x0, xm = x0;
      xp(0, i) += ex;
      xm(0, i) -= ex;
      double gi = (h_plain(a, b, xp) - h_plain(a, b, xm)) / (2 * ex);
      loss += (gi - tgt(0, i)) * (gi - tgt(0, i));
    }
    return loss;
  };

  // AD gradients of the AD-built loss.
  Tape t;
  Var p1 = t.leaf(W1);
  Var p2 = t.leaf(w2);
  Var x = t.leaf(x0);
  Var h = full_sum(matmul(swish(matmul(x, p1)), p2));
  std::vector<Var> xin{x};
  Var gx = t.gradient(h, xin)[0];
  Var loss = full_sum(square(sub(gx, t.constant(tgt))));
  std::vector<Var> wrt{p1, p2};
  auto g_ad = t.backward(loss, wrt);

  const double ep = 1e-4;
  std::vector<Matrix*> params{&W1, &w2};
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Matrix& P = *params[pi];
    for (size_t j = 0; j < P.size(); ++j) {
      double saved = P[j];
      P[j] = saved + ep;
      double fp = loss_fd(W1, w2);
      P[j] = saved - ep;
      double fm = loss_fd(W1, w2);
      P[j] = saved;
      double fd = (fp - fm) / (2 * ep);
      CHECK(std::abs(g_ad[pi][j] - fd) / (std::abs(fd) + 1e-12) <= 1e-4);
    }
  }
}
