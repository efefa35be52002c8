#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "phid/kernels.hpp"
#include "phid/tensor.hpp"

namespace phid {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape
/// lives and has not been truncated past the node.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Matrix& value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
};

enum class Op : std::uint8_t {
  constant,
  leaf,
  add,
  sub,
  mul,
  scale_add,
  matmul,
  transpose,
  row_sum,
  col_sum,
  full_sum,
  pow_const,
  exp_fn,
  abs_fn,
  sign_fn,
  sigmoid_fn,
  slice_cols,
  pad_cols,
  repeat_rows,
  block_repeat_cols,
  block_col_sum,
  spline_basis,
  batch_matvec,
  batch_matvec_t,
  batch_outer,
};

const char* op_name(Op op);

/// Eagerly evaluated computation graph. Nodes are appended in topological
/// order (parents always precede children). backward() leaves the graph as
/// it found it; gradient() appends adjoint nodes, which makes the returned
/// gradients differentiable in turn (that is how nested d/dtheta of
/// d/dx H(x) is obtained).
///
/// A tape is single-threaded; distinct tapes may live on distinct threads.
class Tape {
 public:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double p0 = 0.0;
    double p1 = 0.0;
    int i0 = 0;
    int i1 = 0;
    int i2 = 0;
    Matrix value;
  };

  Var leaf(const Matrix& value);
  Var constant(Matrix value);
  Var constant_scalar(double v) { return constant(Matrix::scalar(v)); }
  Var zeros(int r, int c) { return constant(Matrix(r, c, 0.0)); }
  Var ones(int r, int c) { return constant(Matrix(r, c, 1.0)); }

  size_t size() const { return nodes_.size(); }
  void truncate(size_t n) { nodes_.resize(n); }
  void clear() { nodes_.clear(); }

  const Node& node(int id) const { return nodes_[id]; }
  const Matrix& value(int id) const { return nodes_[id].value; }

  /// Append adjoint nodes computing d(root)/d(wrt_i) and return them as
  /// differentiable Vars. root must be scalar. Vars not contributing to
  /// root yield zero-filled constants.
  std::vector<Var> gradient(Var root, std::span<const Var> wrt);

  /// Plain gradient read-out. Equivalent to gradient() followed by value
  /// extraction, but the tape is restored to its previous size, so the
  /// graph is unchanged and the call is repeatable.
  std::vector<Matrix> backward(Var root, std::span<const Var> wrt);

  // Raw node emission; used by the op builders below.
  Var emit(Op op, int a, int b, double p0 = 0.0, double p1 = 0.0, int i0 = 0, int i1 = 0,
           int i2 = 0);

 private:
  Matrix eval(const Node& n) const;
  void add_contribution(std::vector<int>& adj, int target, Var contrib);
  Var reduce_to_shape(Var g, int rows, int cols);
  void build_vjp(int id, std::vector<int>& adj);

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape->value(id); }

// Graph builders. The second operand of add/sub/mul may broadcast from
// (r,1), (1,c) or (1,1) onto the first operand's shape.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale_add(Var a, double alpha, double beta);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var row_sum(Var a);
Var col_sum(Var a);
Var full_sum(Var a);
Var pow_const(Var a, double p);
Var exp(Var a);
Var abs(Var a);
Var sign(Var a);
Var sigmoid(Var a);
Var slice_cols(Var a, int c0, int c1);
Var pad_cols(Var a, int total, int offset);
Var repeat_rows(Var a, int r);
Var block_repeat_cols(Var a, int nb);
Var block_col_sum(Var a, int nb);
Var spline_basis(Var x, const kernels::SplineGrid& grid, int deriv = 0);
/// Row b of theta is an n x m matrix in column-major vec order; applies it
/// (or its transpose) to the matching row of v.
Var batch_matvec(Var theta, Var v, int n, int m);
Var batch_matvec_t(Var theta, Var v, int n, int m);
/// Row-wise outer product flattened back to column-major vec order.
Var batch_outer(Var a, Var b, int n, int m);

// Composites.
Var square(Var a);
Var mean_all(Var a);
Var row_mean(Var a);
Var swish(Var a);
Var concat_cols(Var a, Var b);
Var neg(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

/// Gradient of a scalar-valued graph builder with respect to its input, as
/// a differentiable node on the same tape.
Var input_gradient(Tape& tape, const std::function<Var(Tape&, Var)>& scalar_fn, Var x);

}  // namespace phid
