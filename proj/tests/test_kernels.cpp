#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "phid/kernels.hpp"
#include "phid/rng.hpp"

using namespace phid;
namespace K = phid::kernels;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(lo, hi);
  return m;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("matmul matches a hand example") {
  Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
  Matrix c = K::ref::matmul(a, b);
  CHECK(c(0, 0) == doctest::Approx(19));
  CHECK(c(0, 1) == doctest::Approx(22));
  CHECK(c(1, 0) == doctest::Approx(43));
  CHECK(c(1, 1) == doctest::Approx(50));
}

TEST_CASE("parallel kernels agree bitwise with the serial reference") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix a = random_matrix(97, 33, rng);
    Matrix b = random_matrix(33, 41, rng);
    CHECK(bitwise_equal(K::ref::matmul(a, b), K::par::matmul(a, b)));
    CHECK(bitwise_equal(K::ref::transpose(a), K::par::transpose(a)));
    CHECK(bitwise_equal(K::ref::row_sum(a), K::par::row_sum(a)));
    CHECK(bitwise_equal(K::ref::col_sum(a), K::par::col_sum(a)));
    CHECK(bitwise_equal(K::ref::full_sum(a), K::par::full_sum(a)));
    CHECK(bitwise_equal(K::ref::unary(K::Un::sigmoid, a), K::par::unary(K::Un::sigmoid, a)));
    CHECK(bitwise_equal(K::ref::pow_const(a, 2.0), K::par::pow_const(a, 2.0)));

    Matrix brow = random_matrix(1, 33, rng);
    Matrix bcol = random_matrix(97, 1, rng);
    for (auto op : {K::Bin::add, K::Bin::sub, K::Bin::mul}) {
      CHECK(bitwise_equal(K::ref::binary(op, a, brow), K::par::binary(op, a, brow)));
      CHECK(bitwise_equal(K::ref::binary(op, a, bcol), K::par::binary(op, a, bcol)));
    }

    Matrix th = random_matrix(50, 12, rng);
    Matrix v3 = random_matrix(50, 3, rng);
    Matrix v4 = random_matrix(50, 4, rng);
    CHECK(bitwise_equal(K::ref::batch_matvec(th, v3, 4, 3, false),
                        K::par::batch_matvec(th, v3, 4, 3, false)));
    CHECK(bitwise_equal(K::ref::batch_matvec(th, v4, 4, 3, true),
                        K::par::batch_matvec(th, v4, 4, 3, true)));
    CHECK(bitwise_equal(K::ref::batch_outer(v4, v3, 4, 3), K::par::batch_outer(v4, v3, 4, 3)));

    K::SplineGrid g;
    Matrix x = random_matrix(64, 5, rng, -3.5, 3.5);
    for (int d = 0; d <= 2; ++d)
      CHECK(bitwise_equal(K::ref::spline_basis(x, g, d), K::par::spline_basis(x, g, d)));
  }
}

TEST_CASE("broadcast semantics") {
  Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  Matrix s = Matrix::scalar(10);
  Matrix r = K::ref::binary(K::Bin::add, a, s);
  CHECK(r(1, 1) == doctest::Approx(14));
  CHECK_THROWS_AS(K::ref::binary(K::Bin::add, a, Matrix(3, 3)), ShapeError);
}

TEST_CASE("batch_matvec applies the column-major matrix per row") {
  // theta row = (1,2,3,4,5,6) as a 2x3 column-major matrix [[1,3,5],[2,4,6]].
  Matrix th(1, 6);
  for (int i = 0; i < 6; ++i) th[i] = i + 1;
  Matrix v = Matrix::from_rows({{1.0, 1.0, 1.0}});
  Matrix out = K::ref::batch_matvec(th, v, 2, 3, false);
  CHECK(out(0, 0) == doctest::Approx(9));
  CHECK(out(0, 1) == doctest::Approx(12));

  Matrix w = Matrix::from_rows({{1.0, 1.0}});
  Matrix out_t = K::ref::batch_matvec(th, w, 2, 3, true);
  CHECK(out_t(0, 0) == doctest::Approx(3));
  CHECK(out_t(0, 1) == doctest::Approx(7));
  CHECK(out_t(0, 2) == doctest::Approx(11));
}

TEST_CASE("batch_outer flattens the outer product column-major") {
  Matrix a = Matrix::from_rows({{2.0, 3.0}});
  Matrix b = Matrix::from_rows({{10.0, 100.0, 1000.0}});
  Matrix out = K::ref::batch_outer(a, b, 2, 3);
  // entry j*n+i = a_i * b_j
  CHECK(out(0, 0) == doctest::Approx(20));
  CHECK(out(0, 1) == doctest::Approx(30));
  CHECK(out(0, 2) == doctest::Approx(200));
  CHECK(out(0, 5) == doctest::Approx(3000));
}

TEST_CASE("B-spline bases form a partition of unity inside the grid") {
  K::SplineGrid g;
  Rng rng(3);
  double buf[16];
  for (int i = 0; i < 200; ++i) {
    double x = rng.uniform(-3.0, 3.0);
    K::spline_basis_point(x, g, 0, buf);
    double s = 0.0;
    int nonzero = 0;
    for (int j = 0; j < g.n_basis(); ++j) {
      CHECK(buf[j] >= -1e-14);
      s += buf[j];
      if (buf[j] > 1e-14) ++nonzero;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nonzero <= g.degree + 1);  // local support
  }
}

TEST_CASE("B-spline derivative matches finite differences") {
  K::SplineGrid g;
  Rng rng(11);
  double bp[16], bm[16], d1[16];
  const double eps = 1e-6;
  for (int i = 0; i < 100; ++i) {
    double x = rng.uniform(-2.9, 2.9);
    K::spline_basis_point(x + eps, g, 0, bp);
    K::spline_basis_point(x - eps, g, 0, bm);
    K::spline_basis_point(x, g, 1, d1);
    for (int j = 0; j < g.n_basis(); ++j) {
      double fd = (bp[j] - bm[j]) / (2 * eps);
      CHECK(d1[j] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("derivatives beyond the spline degree vanish") {
  K::SplineGrid g;
  double buf[16];
  K::spline_basis_point(0.3, g, g.degree + 1, buf);
  for (int j = 0; j < g.n_basis(); ++j) CHECK(buf[j] == 0.0);
}

TEST_CASE("block repeat and block sum are mutually consistent") {
  Rng rng(5);
  Matrix a = random_matrix(7, 4, rng);
  Matrix rep = K::ref::block_repeat_cols(a, 3);
  CHECK(rep.cols() == 12);
  CHECK(rep(2, 3) == a(2, 1));
  Matrix back = K::ref::block_col_sum(rep, 3);
  for (size_t i = 0; i < a.size(); ++i) CHECK(back[i] == doctest::Approx(3.0 * a[i]));
}
