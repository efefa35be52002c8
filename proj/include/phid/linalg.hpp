#pragma once

#include <cmath>
#include <vector>

#include "phid/tensor.hpp"

namespace phid {

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method.
/// Intended for the small (n <= 8) structure checks, not for large systems.
inline std::vector<double> symmetric_eigenvalues(Matrix a) {
  const int n = a.rows();
  if (a.cols() != n) throw ShapeError("symmetric_eigenvalues: matrix not square");
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a(i, i);
  return eig;
}

inline double min_eigenvalue(const Matrix& a) {
  auto e = symmetric_eigenvalues(a);
  double m = e[0];
  for (double v : e) m = std::min(m, v);
  return m;
}

}  // namespace phid
