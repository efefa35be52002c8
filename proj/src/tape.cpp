#include "phid/tape.hpp"

#include <string>

namespace phid {

namespace {
using kernels::Bin;
using kernels::Un;

kernels::SplineGrid grid_of(const Tape::Node& n) {
  kernels::SplineGrid g;
  g.t0 = n.p0;
  g.h = n.p1;
  g.intervals = n.i0;
  g.degree = n.i1;
  return g;
}
}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::constant: return "constant";
    case Op::leaf: return "leaf";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::scale_add: return "scale_add";
    case Op::matmul: return "matmul";
    case Op::transpose: return "transpose";
    case Op::row_sum: return "row_sum";
    case Op::col_sum: return "col_sum";
    case Op::full_sum: return "full_sum";
    case Op::pow_const: return "pow_const";
    case Op::exp_fn: return "exp";
    case Op::abs_fn: return "abs";
    case Op::sign_fn: return "sign";
    case Op::sigmoid_fn: return "sigmoid";
    case Op::slice_cols: return "slice_cols";
    case Op::pad_cols: return "pad_cols";
    case Op::repeat_rows: return "repeat_rows";
    case Op::block_repeat_cols: return "block_repeat_cols";
    case Op::block_col_sum: return "block_col_sum";
    case Op::spline_basis: return "spline_basis";
    case Op::batch_matvec: return "batch_matvec";
    case Op::batch_matvec_t: return "batch_matvec_t";
    case Op::batch_outer: return "batch_outer";
  }
  return "?";
}

Var Tape::leaf(const Matrix& value) {
  nodes_.push_back(Node{Op::leaf, -1, -1, 0, 0, 0, 0, 0, value});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{Op::constant, -1, -1, 0, 0, 0, 0, 0, std::move(value)});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Matrix Tape::eval(const Node& n) const {
  if (n.op == Op::constant || n.op == Op::leaf) throw AutodiffError("eval called on source node");
  const Matrix& A = nodes_[n.a].value;
  switch (n.op) {
    case Op::constant:
    case Op::leaf: break;
    case Op::add: return kernels::binary(Bin::add, A, nodes_[n.b].value);
    case Op::sub: return kernels::binary(Bin::sub, A, nodes_[n.b].value);
    case Op::mul: return kernels::binary(Bin::mul, A, nodes_[n.b].value);
    case Op::scale_add: return kernels::scale_add(A, n.p0, n.p1);
    case Op::matmul: return kernels::matmul(A, nodes_[n.b].value);
    case Op::transpose: return kernels::transpose(A);
    case Op::row_sum: return kernels::row_sum(A);
    case Op::col_sum: return kernels::col_sum(A);
    case Op::full_sum: return kernels::full_sum(A);
    case Op::pow_const: return kernels::pow_const(A, n.p0);
    case Op::exp_fn: return kernels::unary(Un::exp, A);
    case Op::abs_fn: return kernels::unary(Un::abs, A);
    case Op::sign_fn: return kernels::unary(Un::sign, A);
    case Op::sigmoid_fn: return kernels::unary(Un::sigmoid, A);
    case Op::slice_cols: return kernels::slice_cols(A, n.i0, n.i1);
    case Op::pad_cols: return kernels::pad_cols(A, n.i0, n.i1);
    case Op::repeat_rows: return kernels::repeat_rows(A, n.i0);
    case Op::block_repeat_cols: return kernels::block_repeat_cols(A, n.i0);
    case Op::block_col_sum: return kernels::block_col_sum(A, n.i0);
    case Op::spline_basis: return kernels::spline_basis(A, grid_of(n), n.i2);
    case Op::batch_matvec: return kernels::batch_matvec(A, nodes_[n.b].value, n.i0, n.i1, false);
    case Op::batch_matvec_t: return kernels::batch_matvec(A, nodes_[n.b].value, n.i0, n.i1, true);
    case Op::batch_outer: return kernels::batch_outer(A, nodes_[n.b].value, n.i0, n.i1);
  }
  throw AutodiffError("eval: unknown op");
}

Var Tape::emit(Op op, int a, int b, double p0, double p1, int i0, int i1, int i2) {
  Node n{op, a, b, p0, p1, i0, i1, i2, Matrix()};
  n.value = eval(n);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::add_contribution(std::vector<int>& adj, int target, Var contrib) {
  if (adj[target] < 0) {
    adj[target] = contrib.id;
  } else {
    adj[target] = emit(Op::add, adj[target], contrib.id).id;
  }
}

Var Tape::reduce_to_shape(Var g, int rows, int cols) {
  const Matrix& v = g.value();
  if (v.rows() == rows && v.cols() == cols) return g;
  if (rows == 1 && cols == 1) return emit(Op::full_sum, g.id, -1);
  if (rows == 1 && cols == v.cols()) return emit(Op::col_sum, g.id, -1);
  if (cols == 1 && rows == v.rows()) return emit(Op::row_sum, g.id, -1);
  throw AutodiffError("cannot reduce adjoint to broadcast shape");
}

void Tape::build_vjp(int id, std::vector<int>& adj) {
  const Node& n = nodes_[id];
  Var g{this, adj[id]};
  const int a = n.a, b = n.b;
  auto va = [&]() -> Var { return Var{this, a}; };
  auto vb = [&]() -> Var { return Var{this, b}; };

  switch (n.op) {
    case Op::constant:
    case Op::leaf: return;

    case Op::add: {
      add_contribution(adj, a, reduce_to_shape(g, nodes_[a].value.rows(), nodes_[a].value.cols()));
      add_contribution(adj, b, reduce_to_shape(g, nodes_[b].value.rows(), nodes_[b].value.cols()));
      return;
    }
    case Op::sub: {
      add_contribution(adj, a, reduce_to_shape(g, nodes_[a].value.rows(), nodes_[a].value.cols()));
      Var ng = emit(Op::scale_add, g.id, -1, -1.0, 0.0);
      add_contribution(adj, b, reduce_to_shape(ng, nodes_[b].value.rows(), nodes_[b].value.cols()));
      return;
    }
    case Op::mul: {
      Var ga = emit(Op::mul, g.id, b);
      add_contribution(adj, a, reduce_to_shape(ga, nodes_[a].value.rows(), nodes_[a].value.cols()));
      // g has the full output shape, so multiplying by a needs no broadcast.
      Var gb = emit(Op::mul, g.id, a);
      add_contribution(adj, b, reduce_to_shape(gb, nodes_[b].value.rows(), nodes_[b].value.cols()));
      return;
    }
    case Op::scale_add: {
      add_contribution(adj, a, emit(Op::scale_add, g.id, -1, n.p0, 0.0));
      return;
    }
    case Op::matmul: {
      Var bt = emit(Op::transpose, b, -1);
      add_contribution(adj, a, emit(Op::matmul, g.id, bt.id));
      Var at = emit(Op::transpose, a, -1);
      add_contribution(adj, b, emit(Op::matmul, at.id, g.id));
      return;
    }
    case Op::transpose: {
      add_contribution(adj, a, emit(Op::transpose, g.id, -1));
      return;
    }
    case Op::row_sum: {
      add_contribution(adj, a, emit(Op::block_repeat_cols, g.id, -1, 0, 0, nodes_[a].value.cols()));
      return;
    }
    case Op::col_sum: {
      add_contribution(adj, a, emit(Op::repeat_rows, g.id, -1, 0, 0, nodes_[a].value.rows()));
      return;
    }
    case Op::full_sum: {
      Var row = emit(Op::block_repeat_cols, g.id, -1, 0, 0, nodes_[a].value.cols());
      add_contribution(adj, a, emit(Op::repeat_rows, row.id, -1, 0, 0, nodes_[a].value.rows()));
      return;
    }
    case Op::pow_const: {
      Var d = emit(Op::pow_const, a, -1, n.p0 - 1.0);
      Var pd = emit(Op::scale_add, d.id, -1, n.p0, 0.0);
      add_contribution(adj, a, emit(Op::mul, g.id, pd.id));
      return;
    }
    case Op::exp_fn: {
      add_contribution(adj, a, emit(Op::mul, g.id, id));
      return;
    }
    case Op::abs_fn: {
      Var s = emit(Op::sign_fn, a, -1);
      add_contribution(adj, a, emit(Op::mul, g.id, s.id));
      return;
    }
    case Op::sign_fn: return;  // derivative zero almost everywhere
    case Op::sigmoid_fn: {
      // y' = y(1-y), referencing the output node itself.
      Var one_minus = emit(Op::scale_add, id, -1, -1.0, 1.0);
      Var gy = emit(Op::mul, g.id, id);
      add_contribution(adj, a, emit(Op::mul, gy.id, one_minus.id));
      return;
    }
    case Op::slice_cols: {
      add_contribution(adj, a, emit(Op::pad_cols, g.id, -1, 0, 0, nodes_[a].value.cols(), n.i0));
      return;
    }
    case Op::pad_cols: {
      add_contribution(adj, a,
                       emit(Op::slice_cols, g.id, -1, 0, 0, n.i1, n.i1 + nodes_[a].value.cols()));
      return;
    }
    case Op::repeat_rows: {
      add_contribution(adj, a, emit(Op::col_sum, g.id, -1));
      return;
    }
    case Op::block_repeat_cols: {
      add_contribution(adj, a, emit(Op::block_col_sum, g.id, -1, 0, 0, n.i0));
      return;
    }
    case Op::block_col_sum: {
      add_contribution(adj, a, emit(Op::block_repeat_cols, g.id, -1, 0, 0, n.i0));
      return;
    }
    case Op::spline_basis: {
      Var d = emit(Op::spline_basis, a, -1, n.p0, n.p1, n.i0, n.i1, n.i2 + 1);
      Var gd = emit(Op::mul, g.id, d.id);
      kernels::SplineGrid gr = grid_of(n);
      add_contribution(adj, a, emit(Op::block_col_sum, gd.id, -1, 0, 0, gr.n_basis()));
      return;
    }
    case Op::batch_matvec: {
      add_contribution(adj, a, emit(Op::batch_outer, g.id, b, 0, 0, n.i0, n.i1));
      add_contribution(adj, b, emit(Op::batch_matvec_t, a, g.id, 0, 0, n.i0, n.i1));
      return;
    }
    case Op::batch_matvec_t: {
      add_contribution(adj, a, emit(Op::batch_outer, b, g.id, 0, 0, n.i0, n.i1));
      add_contribution(adj, b, emit(Op::batch_matvec, a, g.id, 0, 0, n.i0, n.i1));
      return;
    }
    case Op::batch_outer: {
      add_contribution(adj, a, emit(Op::batch_matvec, g.id, b, 0, 0, n.i0, n.i1));
      add_contribution(adj, b, emit(Op::batch_matvec_t, g.id, a, 0, 0, n.i0, n.i1));
      return;
    }
  }
}

std::vector<Var> Tape::gradient(Var root, std::span<const Var> wrt) {
  if (root.tape != this) throw AutodiffError("gradient: root from another tape");
  if (!nodes_[root.id].value.is_scalar())
    throw AutodiffError("gradient: root must be scalar, got " +
                        std::to_string(nodes_[root.id].value.rows()) + "x" +
                        std::to_string(nodes_[root.id].value.cols()));

  const int n0 = root.id + 1;
  std::vector<char> reached(n0, 0);
  std::vector<int> stack{root.id};
  reached[root.id] = 1;
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    const Node& n = nodes_[id];
    if (!n.value.all_finite())
      throw AutodiffError("non-finite forward value at node " + std::to_string(id) + " (" +
                          op_name(n.op) + ")");
    for (int p : {n.a, n.b}) {
      if (p >= 0 && !reached[p]) {
        reached[p] = 1;
        stack.push_back(p);
      }
    }
  }

  std::vector<int> adj(n0, -1);
  adj[root.id] = ones(1, 1).id;
  for (int id = root.id; id >= 0; --id) {
    if (!reached[id] || adj[id] < 0) continue;
    build_vjp(id, adj);
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    if (w.tape != this) throw AutodiffError("gradient: wrt from another tape");
    if (w.id < n0 && adj[w.id] >= 0) {
      out.push_back(Var{this, adj[w.id]});
    } else {
      out.push_back(zeros(nodes_[w.id].value.rows(), nodes_[w.id].value.cols()));
    }
  }
  return out;
}

std::vector<Matrix> Tape::backward(Var root, std::span<const Var> wrt) {
  const size_t mark = nodes_.size();
  std::vector<Var> gs = gradient(root, wrt);
  std::vector<Matrix> out;
  out.reserve(gs.size());
  for (const Var& g : gs) out.push_back(g.value());
  truncate(mark);
  return out;
}

namespace {
Tape& tape_of(Var a) { return *a.tape; }
}  // namespace

Var add(Var a, Var b) { return tape_of(a).emit(Op::add, a.id, b.id); }
Var sub(Var a, Var b) { return tape_of(a).emit(Op::sub, a.id, b.id); }
Var mul(Var a, Var b) { return tape_of(a).emit(Op::mul, a.id, b.id); }
Var scale_add(Var a, double alpha, double beta) {
  return tape_of(a).emit(Op::scale_add, a.id, -1, alpha, beta);
}
Var matmul(Var a, Var b) { return tape_of(a).emit(Op::matmul, a.id, b.id); }
Var transpose(Var a) { return tape_of(a).emit(Op::transpose, a.id, -1); }
Var row_sum(Var a) { return tape_of(a).emit(Op::row_sum, a.id, -1); }
Var col_sum(Var a) { return tape_of(a).emit(Op::col_sum, a.id, -1); }
Var full_sum(Var a) { return tape_of(a).emit(Op::full_sum, a.id, -1); }
Var pow_const(Var a, double p) { return tape_of(a).emit(Op::pow_const, a.id, -1, p); }
Var exp(Var a) { return tape_of(a).emit(Op::exp_fn, a.id, -1); }
Var abs(Var a) { return tape_of(a).emit(Op::abs_fn, a.id, -1); }
Var sign(Var a) { return tape_of(a).emit(Op::sign_fn, a.id, -1); }
Var sigmoid(Var a) { return tape_of(a).emit(Op::sigmoid_fn, a.id, -1); }
Var slice_cols(Var a, int c0, int c1) {
  return tape_of(a).emit(Op::slice_cols, a.id, -1, 0, 0, c0, c1);
}
Var pad_cols(Var a, int total, int offset) {
  return tape_of(a).emit(Op::pad_cols, a.id, -1, 0, 0, total, offset);
}
Var repeat_rows(Var a, int r) { return tape_of(a).emit(Op::repeat_rows, a.id, -1, 0, 0, r); }
Var block_repeat_cols(Var a, int nb) {
  return tape_of(a).emit(Op::block_repeat_cols, a.id, -1, 0, 0, nb);
}
Var block_col_sum(Var a, int nb) {
  return tape_of(a).emit(Op::block_col_sum, a.id, -1, 0, 0, nb);
}
Var spline_basis(Var x, const kernels::SplineGrid& grid, int deriv) {
  return tape_of(x).emit(Op::spline_basis, x.id, -1, grid.t0, grid.h, grid.intervals, grid.degree,
                         deriv);
}
Var batch_matvec(Var theta, Var v, int n, int m) {
  return tape_of(theta).emit(Op::batch_matvec, theta.id, v.id, 0, 0, n, m);
}
Var batch_matvec_t(Var theta, Var v, int n, int m) {
  return tape_of(theta).emit(Op::batch_matvec_t, theta.id, v.id, 0, 0, n, m);
}
Var batch_outer(Var a, Var b, int n, int m) {
  return tape_of(a).emit(Op::batch_outer, a.id, b.id, 0, 0, n, m);
}

Var square(Var a) { return pow_const(a, 2.0); }
Var mean_all(Var a) {
  return scale_add(full_sum(a), 1.0 / static_cast<double>(a.value().size()), 0.0);
}
Var row_mean(Var a) { return scale_add(row_sum(a), 1.0 / a.value().cols(), 0.0); }
Var swish(Var a) { return mul(a, sigmoid(a)); }
Var concat_cols(Var a, Var b) {
  const int ca = a.value().cols(), cb = b.value().cols();
  return add(pad_cols(a, ca + cb, 0), pad_cols(b, ca + cb, ca));
}
Var neg(Var a) { return scale_add(a, -1.0, 0.0); }

Var input_gradient(Tape& tape, const std::function<Var(Tape&, Var)>& scalar_fn, Var x) {
  Var out = scalar_fn(tape, x);
  if (!out.value().is_scalar())
    throw AutodiffError("input_gradient: scalar_fn produced a non-scalar output");
  std::vector<Var> wrt{x};
  return tape.gradient(out, wrt)[0];
}

}  // namespace phid
