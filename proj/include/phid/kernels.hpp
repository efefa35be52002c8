#pragma once

#include "phid/tensor.hpp"

namespace phid::kernels {

/// Elementwise binary ops. The second operand may be the same shape as the
/// first, or broadcast from (r,1), (1,c) or (1,1).
enum class Bin { add, sub, mul };

/// Elementwise unary ops.
enum class Un { exp, abs, sign, sigmoid };

/// Uniform B-spline grid description. Knots are t0 + (j - degree)*h for
/// j = 0..intervals + 2*degree, giving intervals + degree bases of the full
/// degree. Inputs are clamped to [t0, t0 + intervals*h] before evaluation.
struct SplineGrid {
  double t0 = -3.0;
  double h = 1.2;
  int intervals = 5;
  int degree = 3;

  int n_basis() const { return intervals + degree; }
  int n_knots() const { return intervals + 2 * degree + 1; }
  double knot(int j) const { return t0 + (j - degree) * h; }
  double t_end() const { return t0 + intervals * h; }
};

/// Evaluate all n_basis() B-spline bases (or their deriv-th derivative) at x.
/// out must hold n_basis() doubles.
void spline_basis_point(double x, const SplineGrid& g, int deriv, double* out);

// Serial reference kernels: straightforward textbook loops, kept as the
// ground truth the parallel kernels are tested against.
namespace ref {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix binary(Bin op, const Matrix& a, const Matrix& b);
Matrix scale_add(const Matrix& a, double alpha, double beta);
Matrix unary(Un op, const Matrix& a);
Matrix pow_const(const Matrix& a, double p);
Matrix row_sum(const Matrix& a);
Matrix col_sum(const Matrix& a);
Matrix full_sum(const Matrix& a);
Matrix slice_cols(const Matrix& a, int c0, int c1);
Matrix pad_cols(const Matrix& a, int total, int offset);
Matrix repeat_rows(const Matrix& a, int r);
Matrix block_repeat_cols(const Matrix& a, int nb);
Matrix block_col_sum(const Matrix& a, int nb);
Matrix batch_matvec(const Matrix& th, const Matrix& v, int n, int m, bool transposed);
Matrix batch_outer(const Matrix& a, const Matrix& b, int n, int m);
Matrix spline_basis(const Matrix& x, const SplineGrid& g, int deriv);
}  // namespace ref

// OpenMP kernels, parallel over independent output rows. Per-element
// accumulation order matches the reference, so results are bitwise equal
// for any thread count.
namespace par {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix binary(Bin op, const Matrix& a, const Matrix& b);
Matrix scale_add(const Matrix& a, double alpha, double beta);
Matrix unary(Un op, const Matrix& a);
Matrix pow_const(const Matrix& a, double p);
Matrix row_sum(const Matrix& a);
Matrix col_sum(const Matrix& a);
Matrix full_sum(const Matrix& a);
Matrix slice_cols(const Matrix& a, int c0, int c1);
Matrix pad_cols(const Matrix& a, int total, int offset);
Matrix repeat_rows(const Matrix& a, int r);
Matrix block_repeat_cols(const Matrix& a, int nb);
Matrix block_col_sum(const Matrix& a, int nb);
Matrix batch_matvec(const Matrix& th, const Matrix& v, int n, int m, bool transposed);
Matrix batch_outer(const Matrix& a, const Matrix& b, int n, int m);
Matrix spline_basis(const Matrix& x, const SplineGrid& g, int deriv);
}  // namespace par

/// Global switch between the reference and OpenMP kernels. Defaults to
/// parallel when OpenMP has more than one thread available.
void set_parallel(bool enabled);
bool parallel_enabled();

// Dispatching entry points used by the autodiff tape.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix binary(Bin op, const Matrix& a, const Matrix& b);
Matrix scale_add(const Matrix& a, double alpha, double beta);
Matrix unary(Un op, const Matrix& a);
Matrix pow_const(const Matrix& a, double p);
Matrix row_sum(const Matrix& a);
Matrix col_sum(const Matrix& a);
Matrix full_sum(const Matrix& a);
Matrix slice_cols(const Matrix& a, int c0, int c1);
Matrix pad_cols(const Matrix& a, int total, int offset);
Matrix repeat_rows(const Matrix& a, int r);
Matrix block_repeat_cols(const Matrix& a, int nb);
Matrix block_col_sum(const Matrix& a, int nb);
Matrix batch_matvec(const Matrix& th, const Matrix& v, int n, int m, bool transposed);
Matrix batch_outer(const Matrix& a, const Matrix& b, int n, int m);
Matrix spline_basis(const Matrix& x, const SplineGrid& g, int deriv);

}  // namespace phid::kernels
