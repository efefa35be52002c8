#include "phid/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace phid::kernels {

namespace {

std::atomic<bool> g_parallel{true};

int hw_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Work below this many output elements is not worth a parallel region.
constexpr size_t kParallelCutoff = 2048;

bool want_parallel(size_t work) {
  return g_parallel.load(std::memory_order_relaxed) && hw_threads() > 1 && work >= kParallelCutoff;
}

template <class F>
inline void for_rows(int n, bool parallel, F&& f) {
  if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int i = 0; i < n; ++i) f(i);
  } else {
    for (int i = 0; i < n; ++i) f(i);
  }
}

inline double sigmoid_stable(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double apply_unary(Un op, double x) {
  switch (op) {
    case Un::exp: return std::exp(x);
    case Un::abs: return std::abs(x);
    case Un::sign: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case Un::sigmoid: return sigmoid_stable(x);
  }
  return 0.0;
}

inline double apply_pow(double x, double p) {
  if (p == 2.0) return x * x;
  if (p == 1.0) return x;
  if (p == -1.0) return 1.0 / x;
  if (p == 0.5) return std::sqrt(x);
  if (p == -0.5) return 1.0 / std::sqrt(x);
  return std::pow(x, p);
}

void check_broadcast(const Matrix& a, const Matrix& b) {
  bool ok = (b.rows() == a.rows() || b.rows() == 1) && (b.cols() == a.cols() || b.cols() == 1);
  if (!ok)
    throw ShapeError("binary: cannot broadcast (" + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ") onto (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + ")");
}

void check_batch_dims(const Matrix& th, int n, int m, int rows) {
  if (th.rows() != rows || th.cols() != n * m)
    throw ShapeError("batched op: theta must be batch x (n*m)");
}

// Shared implementations; `parallel` selects the OpenMP path. Each output
// element is produced by exactly one iteration with a fixed accumulation
// order, so both paths agree bitwise.

Matrix matmul_impl(const Matrix& a, const Matrix& b, bool parallel) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  const int r = a.rows(), k = a.cols(), c = b.cols();
  Matrix out(r, c, 0.0);
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for_rows(r, parallel, [&](int i) {
    const double* arow = pa + static_cast<size_t>(i) * k;
    double* orow = po + static_cast<size_t>(i) * c;
    for (int kk = 0; kk < k; ++kk) {
      const double aik = arow[kk];
      const double* brow = pb + static_cast<size_t>(kk) * c;
      for (int j = 0; j < c; ++j) orow[j] += aik * brow[j];
    }
  });
  return out;
}

Matrix transpose_impl(const Matrix& a, bool parallel) {
  Matrix out(a.cols(), a.rows());
  for_rows(a.cols(), parallel, [&](int i) {
    for (int j = 0; j < a.rows(); ++j) out(i, j) = a(j, i);
  });
  return out;
}

Matrix binary_impl(Bin op, const Matrix& a, const Matrix& b, bool parallel) {
  check_broadcast(a, b);
  const int r = a.rows(), c = a.cols();
  Matrix out(r, c);
  const bool brow1 = b.rows() == 1, bcol1 = b.cols() == 1;
  for_rows(r, parallel, [&](int i) {
    const int bi = brow1 ? 0 : i;
    for (int j = 0; j < c; ++j) {
      const double x = a(i, j);
      const double y = b(bi, bcol1 ? 0 : j);
      double v = 0.0;
      switch (op) {
        case Bin::add: v = x + y; break;
        case Bin::sub: v = x - y; break;
        case Bin::mul: v = x * y; break;
      }
      out(i, j) = v;
    }
  });
  return out;
}

Matrix scale_add_impl(const Matrix& a, double alpha, double beta, bool parallel) {
  Matrix out(a.rows(), a.cols());
  const double* pa = a.data();
  double* po = out.data();
  const int c = a.cols();
  for_rows(a.rows(), parallel, [&](int i) {
    for (int j = 0; j < c; ++j) {
      const size_t idx = static_cast<size_t>(i) * c + j;
      po[idx] = alpha * pa[idx] + beta;
    }
  });
  return out;
}

Matrix unary_impl(Un op, const Matrix& a, bool parallel) {
  Matrix out(a.rows(), a.cols());
  const int c = a.cols();
  for_rows(a.rows(), parallel, [&](int i) {
    for (int j = 0; j < c; ++j) out(i, j) = apply_unary(op, a(i, j));
  });
  return out;
}

Matrix pow_const_impl(const Matrix& a, double p, bool parallel) {
  Matrix out(a.rows(), a.cols());
  const int c = a.cols();
  for_rows(a.rows(), parallel, [&](int i) {
    for (int j = 0; j < c; ++j) out(i, j) = apply_pow(a(i, j), p);
  });
  return out;
}

Matrix row_sum_impl(const Matrix& a, bool parallel) {
  Matrix out(a.rows(), 1);
  for_rows(a.rows(), parallel, [&](int i) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += a(i, j);
    out(i, 0) = s;
  });
  return out;
}

Matrix col_sum_impl(const Matrix& a, bool parallel) {
  Matrix out(1, a.cols());
  for_rows(a.cols(), parallel, [&](int j) {
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i) s += a(i, j);
    out(0, j) = s;
  });
  return out;
}

// Always serial: a single scalar accumulated in a fixed order keeps results
// independent of the thread count.
Matrix full_sum_impl(const Matrix& a) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i];
  return Matrix::scalar(s);
}

Matrix slice_cols_impl(const Matrix& a, int c0, int c1, bool parallel) {
  if (c0 < 0 || c1 > a.cols() || c0 >= c1) throw ShapeError("slice_cols: bad range");
  Matrix out(a.rows(), c1 - c0);
  for_rows(a.rows(), parallel, [&](int i) {
    for (int j = c0; j < c1; ++j) out(i, j - c0) = a(i, j);
  });
  return out;
}

Matrix pad_cols_impl(const Matrix& a, int total, int offset, bool parallel) {
  if (offset < 0 || offset + a.cols() > total) throw ShapeError("pad_cols: bad layout");
  Matrix out(a.rows(), total, 0.0);
  for_rows(a.rows(), parallel, [&](int i) {
    for (int j = 0; j < a.cols(); ++j) out(i, offset + j) = a(i, j);
  });
  return out;
}

Matrix repeat_rows_impl(const Matrix& a, int r, bool parallel) {
  if (a.rows() != 1) throw ShapeError("repeat_rows: input must have one row");
  Matrix out(r, a.cols());
  for_rows(r, parallel, [&](int i) {
    for (int j = 0; j < a.cols(); ++j) out(i, j) = a(0, j);
  });
  return out;
}

Matrix block_repeat_cols_impl(const Matrix& a, int nb, bool parallel) {
  Matrix out(a.rows(), a.cols() * nb);
  for_rows(a.rows(), parallel, [&](int i) {
    for (int j = 0; j < a.cols(); ++j)
      for (int t = 0; t < nb; ++t) out(i, j * nb + t) = a(i, j);
  });
  return out;
}

Matrix block_col_sum_impl(const Matrix& a, int nb, bool parallel) {
  if (a.cols() % nb != 0) throw ShapeError("block_col_sum: cols not divisible by block");
  const int c = a.cols() / nb;
  Matrix out(a.rows(), c);
  for_rows(a.rows(), parallel, [&](int i) {
    for (int j = 0; j < c; ++j) {
      double s = 0.0;
      for (int t = 0; t < nb; ++t) s += a(i, j * nb + t);
      out(i, j) = s;
    }
  });
  return out;
}

// Rows of `th` hold n x m matrices in column-major vec order: M(i,j) = th[j*n+i].
Matrix batch_matvec_impl(const Matrix& th, const Matrix& v, int n, int m, bool transposed,
                         bool parallel) {
  check_batch_dims(th, n, m, v.rows());
  const int out_dim = transposed ? m : n;
  const int in_dim = transposed ? n : m;
  if (v.cols() != in_dim) throw ShapeError("batch_matvec: vector width mismatch");
  Matrix out(v.rows(), out_dim);
  for_rows(v.rows(), parallel, [&](int b) {
    const double* trow = th.data() + static_cast<size_t>(b) * n * m;
    const double* vrow = v.data() + static_cast<size_t>(b) * in_dim;
    double* orow = out.data() + static_cast<size_t>(b) * out_dim;
    if (!transposed) {
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += trow[j * n + i] * vrow[j];
        orow[i] = s;
      }
    } else {
      for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += trow[j * n + i] * vrow[i];
        orow[j] = s;
      }
    }
  });
  return out;
}

Matrix batch_outer_impl(const Matrix& a, const Matrix& b, int n, int m, bool parallel) {
  if (a.cols() != n || b.cols() != m || a.rows() != b.rows())
    throw ShapeError("batch_outer: expected batch x n and batch x m inputs");
  Matrix out(a.rows(), n * m);
  for_rows(a.rows(), parallel, [&](int k) {
    const double* arow = a.data() + static_cast<size_t>(k) * n;
    const double* brow = b.data() + static_cast<size_t>(k) * m;
    double* orow = out.data() + static_cast<size_t>(k) * n * m;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) orow[j * n + i] = arow[i] * brow[j];
  });
  return out;
}

Matrix spline_basis_impl(const Matrix& x, const SplineGrid& g, int deriv, bool parallel) {
  const int nb = g.n_basis();
  Matrix out(x.rows(), x.cols() * nb);
  for_rows(x.rows(), parallel, [&](int i) {
    for (int j = 0; j < x.cols(); ++j)
      spline_basis_point(x(i, j), g, deriv, out.data() + (static_cast<size_t>(i) * x.cols() + j) * nb);
  });
  return out;
}

}  // namespace

void spline_basis_point(double x, const SplineGrid& g, int deriv, double* out) {
  const int k = g.degree;
  const int nb = g.n_basis();
  const int n_knots = g.n_knots();
  constexpr int kMaxKnots = 64;
  if (n_knots > kMaxKnots) throw ShapeError("spline grid too large");
  if (deriv > k) {
    for (int i = 0; i < nb; ++i) out[i] = 0.0;
    return;
  }
  // Clamp into the grid; outside the grid the basis is frozen at the border.
  x = std::min(std::max(x, g.t0), g.t_end());

  double knots[kMaxKnots];
  for (int j = 0; j < n_knots; ++j) knots[j] = g.knot(j);

  // Degree-0 indicator on the interval containing x.
  double buf[kMaxKnots] = {0.0};
  int idx = static_cast<int>(std::floor((x - knots[0]) / g.h));
  idx = std::min(std::max(idx, k), k + g.intervals - 1);
  buf[idx] = 1.0;

  // Cox-de Boor up to degree k - deriv.
  const int k_low = k - deriv;
  for (int q = 1; q <= k_low; ++q) {
    const int count = n_knots - q - 1;
    for (int j = 0; j < count; ++j) {
      double left = 0.0, right = 0.0;
      if (buf[j] != 0.0) left = (x - knots[j]) / (knots[j + q] - knots[j]) * buf[j];
      if (buf[j + 1] != 0.0)
        right = (knots[j + q + 1] - x) / (knots[j + q + 1] - knots[j + 1]) * buf[j + 1];
      buf[j] = left + right;
    }
    buf[count] = 0.0;
  }
  // Derivative steps; uniform knots make each step a scaled difference.
  for (int q = k_low + 1; q <= k; ++q) {
    const int count = n_knots - q - 1;
    for (int j = 0; j < count; ++j) buf[j] = (buf[j] - buf[j + 1]) / g.h;
    buf[count] = 0.0;
  }
  for (int i = 0; i < nb; ++i) out[i] = buf[i];
}

void set_parallel(bool enabled) { g_parallel.store(enabled, std::memory_order_relaxed); }
bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }

namespace ref {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols(), 0.0);
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (int j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Matrix transpose(const Matrix& a) { return transpose_impl(a, false); }
Matrix binary(Bin op, const Matrix& a, const Matrix& b) { return binary_impl(op, a, b, false); }
Matrix scale_add(const Matrix& a, double alpha, double beta) {
  return scale_add_impl(a, alpha, beta, false);
}
Matrix unary(Un op, const Matrix& a) { return unary_impl(op, a, false); }
Matrix pow_const(const Matrix& a, double p) { return pow_const_impl(a, p, false); }
Matrix row_sum(const Matrix& a) { return row_sum_impl(a, false); }
Matrix col_sum(const Matrix& a) { return col_sum_impl(a, false); }
Matrix full_sum(const Matrix& a) { return full_sum_impl(a); }
Matrix slice_cols(const Matrix& a, int c0, int c1) { return slice_cols_impl(a, c0, c1, false); }
Matrix pad_cols(const Matrix& a, int total, int offset) {
  return pad_cols_impl(a, total, offset, false);
}
Matrix repeat_rows(const Matrix& a, int r) { return repeat_rows_impl(a, r, false); }
Matrix block_repeat_cols(const Matrix& a, int nb) { return block_repeat_cols_impl(a, nb, false); }
Matrix block_col_sum(const Matrix& a, int nb) { return block_col_sum_impl(a, nb, false); }
Matrix batch_matvec(const Matrix& th, const Matrix& v, int n, int m, bool transposed) {
  return batch_matvec_impl(th, v, n, m, transposed, false);
}
Matrix batch_outer(const Matrix& a, const Matrix& b, int n, int m) {
  return batch_outer_impl(a, b, n, m, false);
}
Matrix spline_basis(const Matrix& x, const SplineGrid& g, int deriv) {
  return spline_basis_impl(x, g, deriv, false);
}

}  // namespace ref

namespace par {

Matrix matmul(const Matrix& a, const Matrix& b) { return matmul_impl(a, b, true); }
Matrix transpose(const Matrix& a) { return transpose_impl(a, true); }
Matrix binary(Bin op, const Matrix& a, const Matrix& b) { return binary_impl(op, a, b, true); }
Matrix scale_add(const Matrix& a, double alpha, double beta) {
  return scale_add_impl(a, alpha, beta, true);
}
Matrix unary(Un op, const Matrix& a) { return unary_impl(op, a, true); }
Matrix pow_const(const Matrix& a, double p) { return pow_const_impl(a, p, true); }
Matrix row_sum(const Matrix& a) { return row_sum_impl(a, true); }
Matrix col_sum(const Matrix& a) { return col_sum_impl(a, true); }
Matrix full_sum(const Matrix& a) { return full_sum_impl(a); }
Matrix slice_cols(const Matrix& a, int c0, int c1) { return slice_cols_impl(a, c0, c1, true); }
Matrix pad_cols(const Matrix& a, int total, int offset) {
  return pad_cols_impl(a, total, offset, true);
}
Matrix repeat_rows(const Matrix& a, int r) { return repeat_rows_impl(a, r, true); }
Matrix block_repeat_cols(const Matrix& a, int nb) { return block_repeat_cols_impl(a, nb, true); }
Matrix block_col_sum(const Matrix& a, int nb) { return block_col_sum_impl(a, nb, true); }
Matrix batch_matvec(const Matrix& th, const Matrix& v, int n, int m, bool transposed) {
  return batch_matvec_impl(th, v, n, m, transposed, true);
}
Matrix batch_outer(const Matrix& a, const Matrix& b, int n, int m) {
  return batch_outer_impl(a, b, n, m, true);
}
Matrix spline_basis(const Matrix& x, const SplineGrid& g, int deriv) {
  return spline_basis_impl(x, g, deriv, true);
}

}  // namespace par

Matrix matmul(const Matrix& a, const Matrix& b) {
  return matmul_impl(a, b, want_parallel(static_cast<size_t>(a.rows()) * b.cols() * a.cols()));
}
Matrix transpose(const Matrix& a) { return transpose_impl(a, want_parallel(a.size())); }
Matrix binary(Bin op, const Matrix& a, const Matrix& b) {
  return binary_impl(op, a, b, want_parallel(a.size()));
}
Matrix scale_add(const Matrix& a, double alpha, double beta) {
  return scale_add_impl(a, alpha, beta, want_parallel(a.size()));
}
Matrix unary(Un op, const Matrix& a) { return unary_impl(op, a, want_parallel(a.size())); }
Matrix pow_const(const Matrix& a, double p) {
  return pow_const_impl(a, p, want_parallel(a.size()));
}
Matrix row_sum(const Matrix& a) { return row_sum_impl(a, want_parallel(a.size())); }
Matrix col_sum(const Matrix& a) { return col_sum_impl(a, want_parallel(a.size())); }
Matrix full_sum(const Matrix& a) { return full_sum_impl(a); }
Matrix slice_cols(const Matrix& a, int c0, int c1) {
  return slice_cols_impl(a, c0, c1, want_parallel(a.size()));
}
Matrix pad_cols(const Matrix& a, int total, int offset) {
  return pad_cols_impl(a, total, offset, want_parallel(a.size()));
}
Matrix repeat_rows(const Matrix& a, int r) {
  return repeat_rows_impl(a, r, want_parallel(static_cast<size_t>(r) * a.cols()));
}
Matrix block_repeat_cols(const Matrix& a, int nb) {
  return block_repeat_cols_impl(a, nb, want_parallel(a.size() * nb));
}
Matrix block_col_sum(const Matrix& a, int nb) {
  return block_col_sum_impl(a, nb, want_parallel(a.size()));
}
Matrix batch_matvec(const Matrix& th, const Matrix& v, int n, int m, bool transposed) {
  return batch_matvec_impl(th, v, n, m, transposed, want_parallel(th.size()));
}
Matrix batch_outer(const Matrix& a, const Matrix& b, int n, int m) {
  return batch_outer_impl(a, b, n, m, want_parallel(static_cast<size_t>(a.rows()) * n * m));
}
Matrix spline_basis(const Matrix& x, const SplineGrid& g, int deriv) {
  return spline_basis_impl(x, g, deriv, want_parallel(x.size() * g.n_basis()));
}

}  // namespace phid::kernels
