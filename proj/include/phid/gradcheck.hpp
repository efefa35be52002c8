#pragma once

#include <functional>
#include <vector>

#include "phid/tape.hpp"

namespace phid {

/// Builds a scalar graph from leaves created out of the given parameter
/// buffers. Must be pure: same buffers in, same graph out.
using ScalarBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Central-difference check of reverse-mode gradients. Perturbs every
/// coordinate of every parameter buffer by +-eps, rebuilds the forward pass
/// from scratch, and compares against backward(). Returns
/// max over coordinates of |g_ad - g_fd| / (|g_fd| + 1e-12).
inline double finite_diff_check(const ScalarBuilder& build, const std::vector<Matrix*>& params,
                                double eps) {
  if (eps <= 0.0) throw Error("finite_diff_check: eps must be positive");

  auto eval_scalar = [&]() {
    Tape t;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const Matrix* p : params) leaves.push_back(t.leaf(*p));
    return build(t, leaves).value().scalar_value();
  };

  // Reverse-mode gradients once.
  Tape t;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const Matrix* p : params) leaves.push_back(t.leaf(*p));
  Var root = build(t, leaves);
  std::vector<Matrix> grads = t.backward(root, leaves);

  double max_err = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Matrix& p = *params[pi];
    for (size_t j = 0; j < p.size(); ++j) {
      const double saved = p[j];
      p[j] = saved + eps;
      const double fp = eval_scalar();
      p[j] = saved - eps;
      const double fm = eval_scalar();
      p[j] = saved;
      const double g_fd = (fp - fm) / (2.0 * eps);
      const double err = std::abs(grads[pi][j] - g_fd) / (std::abs(g_fd) + 1e-12);
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace phid
