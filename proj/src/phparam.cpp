#include "phid/phparam.hpp"

#include <cmath>
#include <functional>

#include "phid/rng.hpp"

namespace phid {

Matrix vtf(const Matrix& v, int n, int m) {
  if (static_cast<int>(v.size()) != n * m) throw ShapeError("vtf: vector length != n*m");
  Matrix out(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) out(i, j) = v[static_cast<size_t>(j) * n + i];
  return out;
}

Matrix vtf_flatten(const Matrix& m) {
  Matrix out(1, m.rows() * m.cols());
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i) out[static_cast<size_t>(j) * m.rows() + i] = m(i, j);
  return out;
}

Matrix assemble_J(const Matrix& theta, int n) {
  Matrix M = vtf(theta, n, n);
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = M(j, i) - M(i, j);
  return out;
}

Matrix assemble_R(const Matrix& theta, int n) {
  Matrix M = vtf(theta, n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += M(i, k) * M(j, k);
      out(i, j) = s * acc;
    }
  return out;
}

Matrix assemble_B(const Matrix& theta, int n, int m) { return vtf(theta, n, m); }

// ---------------------------------------------------------------------------
// Ansatz sets
// ---------------------------------------------------------------------------

AnsatzSet AnsatzSet::constant(int input_dim) {
  AnsatzSet s;
  s.input_dim = input_dim;
  s.fns.push_back(AnsatzFunction{std::vector<int>(input_dim, 0)});
  return s;
}

AnsatzSet AnsatzSet::monomials(int input_dim, int max_degree) {
  AnsatzSet s;
  s.input_dim = input_dim;
  // graded lexicographic enumeration
  std::vector<int> e(input_dim, 0);
  for (int deg = 0; deg <= max_degree; ++deg) {
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
      if (pos == input_dim - 1) {
        e[pos] = remaining;
        s.fns.push_back(AnsatzFunction{e});
        return;
      }
      for (int k = remaining; k >= 0; --k) {
        e[pos] = k;
        rec(pos + 1, remaining - k);
      }
    };
    if (input_dim == 0) break;
    rec(0, deg);
  }
  return s;
}

int AnsatzSet::max_degree() const {
  int d = 0;
  for (const auto& f : fns) d = std::max(d, f.total_degree());
  return d;
}

Matrix AnsatzSet::eval(const Matrix& x) const {
  if (x.cols() != input_dim) throw ShapeError("AnsatzSet::eval: input width mismatch");
  Matrix out(x.rows(), size());
  for (int b = 0; b < x.rows(); ++b)
    for (int f = 0; f < size(); ++f) {
      double v = 1.0;
      for (int i = 0; i < input_dim; ++i)
        for (int e = 0; e < fns[f].exponents[i]; ++e) v *= x(b, i);
      out(b, f) = v;
    }
  return out;
}

Var AnsatzSet::build(Tape& tape, Var x) const {
  if (x.value().cols() != input_dim) throw ShapeError("AnsatzSet::build: input width mismatch");
  const int batch = x.value().rows();
  Var feats{};
  for (int f = 0; f < size(); ++f) {
    Var v{};
    bool have = false;
    for (int i = 0; i < input_dim; ++i) {
      for (int e = 0; e < fns[f].exponents[i]; ++e) {
        Var xi = slice_cols(x, i, i + 1);
        v = have ? mul(v, xi) : xi;
        have = true;
      }
    }
    if (!have) v = tape.ones(batch, 1);
    feats = (f == 0) ? v : concat_cols(feats, v);
  }
  return feats;
}

Matrix eval_ansatz_block(const Matrix& weights, const AnsatzSet& a, const Matrix& x) {
  if (weights.cols() != a.size()) throw ShapeError("eval_ansatz_block: weight columns != |a|");
  Matrix feats = a.eval(x);  // batch x N
  Matrix out(x.rows(), weights.rows());
  for (int b = 0; b < x.rows(); ++b)
    for (int o = 0; o < weights.rows(); ++o) {
      double acc = 0.0;
      for (int f = 0; f < a.size(); ++f) acc += weights(o, f) * feats(b, f);
      out(b, o) = acc;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Blocks
// ---------------------------------------------------------------------------

std::string to_string(BlockKind k) {
  switch (k) {
    case BlockKind::free_mlp: return "mlp";
    case BlockKind::free_kan: return "kan";
    case BlockKind::ansatz: return "ansatz";
    case BlockKind::constant: return "constant";
  }
  return "?";
}

std::string to_string(HamKind k) {
  switch (k) {
    case HamKind::free_mlp: return "mlp";
    case HamKind::free_kan: return "kan";
    case HamKind::ansatz: return "ansatz";
    case HamKind::quadratic: return "quadratic";
    case HamKind::shifted_quadratic: return "shifted-quadratic";
  }
  return "?";
}

BlockKind block_kind_from_string(const std::string& s) {
  if (s == "mlp") return BlockKind::free_mlp;
  if (s == "kan") return BlockKind::free_kan;
  if (s == "ansatz") return BlockKind::ansatz;
  if (s == "constant") return BlockKind::constant;
  throw ConfigError("unknown block kind: " + s);
}

HamKind ham_kind_from_string(const std::string& s) {
  if (s == "mlp") return HamKind::free_mlp;
  if (s == "kan") return HamKind::free_kan;
  if (s == "ansatz") return HamKind::ansatz;
  if (s == "quadratic") return HamKind::quadratic;
  if (s == "shifted-quadratic") return HamKind::shifted_quadratic;
  throw ConfigError("unknown Hamiltonian kind: " + s);
}

MatrixBlock MatrixBlock::make_free_mlp(int in_dim, int out_len, std::uint64_t seed,
                                       int hidden_layers, int hidden_width) {
  MatrixBlock b;
  b.kind = BlockKind::free_mlp;
  b.out_len = out_len;
  b.mlp_cfg = MLPConfig{in_dim, out_len, hidden_layers, hidden_width, true};
  b.mlp_w = init_weights(b.mlp_cfg, seed);
  return b;
}

MatrixBlock MatrixBlock::make_free_kan(int in_dim, int out_len, std::uint64_t seed) {
  MatrixBlock b;
  b.kind = BlockKind::free_kan;
  b.out_len = out_len;
  b.kan_cfg = KANConfig{in_dim, out_len};
  b.kan_w = init_weights(b.kan_cfg, seed);
  return b;
}

MatrixBlock MatrixBlock::make_ansatz(const AnsatzSet& a, int out_len) {
  MatrixBlock b;
  b.kind = BlockKind::ansatz;
  b.out_len = out_len;
  b.aset = a;
  b.pri = Matrix(out_len, a.size(), 0.0);
  return b;
}

MatrixBlock MatrixBlock::make_constant(int out_len) {
  MatrixBlock b;
  b.kind = BlockKind::constant;
  b.out_len = out_len;
  b.theta_const = Matrix(1, out_len, 0.0);
  return b;
}

std::vector<Matrix*> MatrixBlock::trainable() {
  switch (kind) {
    case BlockKind::free_mlp: return mlp_w.buffers();
    case BlockKind::free_kan: return kan_w.buffers();
    case BlockKind::ansatz: return {&pri};
    case BlockKind::constant: return {&theta_const};
  }
  return {};
}

std::vector<const Matrix*> MatrixBlock::trainable() const {
  switch (kind) {
    case BlockKind::free_mlp: return mlp_w.buffers();
    case BlockKind::free_kan: return kan_w.buffers();
    case BlockKind::ansatz: return {&pri};
    case BlockKind::constant: return {&theta_const};
  }
  return {};
}

long MatrixBlock::param_count() const {
  long c = 0;
  for (const Matrix* m : trainable()) c += static_cast<long>(m->size());
  return c;
}

HamiltonianBlock HamiltonianBlock::make_free_mlp(int n, std::uint64_t seed, int hidden_layers,
                                                 int hidden_width) {
  HamiltonianBlock h;
  h.kind = HamKind::free_mlp;
  h.n = n;
  h.mlp_cfg = MLPConfig{n, 1, hidden_layers, hidden_width, true};
  h.mlp_w = init_weights(h.mlp_cfg, seed);
  return h;
}

HamiltonianBlock HamiltonianBlock::make_free_kan(int n, std::uint64_t seed) {
  HamiltonianBlock h;
  h.kind = HamKind::free_kan;
  h.n = n;
  h.kan_cfg = KANConfig{n, 1};
  h.kan_w = init_weights(h.kan_cfg, seed);
  return h;
}

HamiltonianBlock HamiltonianBlock::make_ansatz(const AnsatzSet& a, int n) {
  HamiltonianBlock h;
  h.kind = HamKind::ansatz;
  h.n = n;
  h.aset = a;
  h.pri = Matrix(1, a.size(), 0.0);
  return h;
}

HamiltonianBlock HamiltonianBlock::make_quadratic(int n, std::uint64_t seed) {
  HamiltonianBlock h;
  h.kind = HamKind::quadratic;
  h.n = n;
  Rng rng(mix_seed(seed, 0x5148));
  h.theta_q = Matrix(1, n * n);
  for (size_t i = 0; i < h.theta_q.size(); ++i) h.theta_q[i] = rng.uniform(-0.5, 0.5);
  return h;
}

HamiltonianBlock HamiltonianBlock::make_shifted_quadratic(int n, std::uint64_t seed) {
  HamiltonianBlock h = make_quadratic(n, seed);
  h.kind = HamKind::shifted_quadratic;
  h.shift = Matrix(1, n, 0.0);
  return h;
}

std::vector<Matrix*> HamiltonianBlock::trainable() {
  switch (kind) {
    case HamKind::free_mlp: return mlp_w.buffers();
    case HamKind::free_kan: return kan_w.buffers();
    case HamKind::ansatz: return {&pri};
    case HamKind::quadratic: return {&theta_q};
    case HamKind::shifted_quadratic: return {&theta_q, &shift};
  }
  return {};
}

std::vector<const Matrix*> HamiltonianBlock::trainable() const {
  switch (kind) {
    case HamKind::free_mlp: return mlp_w.buffers();
    case HamKind::free_kan: return kan_w.buffers();
    case HamKind::ansatz: return {&pri};
    case HamKind::quadratic: return {&theta_q};
    case HamKind::shifted_quadratic: return {&theta_q, &shift};
  }
  return {};
}

long HamiltonianBlock::param_count() const {
  long c = 0;
  for (const Matrix* m : trainable()) c += static_cast<long>(m->size());
  return c;
}

std::vector<Matrix*> Parametrization::trainable() {
  std::vector<Matrix*> out;
  for (Matrix* m : J.trainable()) out.push_back(m);
  for (Matrix* m : R.trainable()) out.push_back(m);
  for (Matrix* m : B.trainable()) out.push_back(m);
  for (Matrix* m : H.trainable()) out.push_back(m);
  return out;
}

std::vector<const Matrix*> Parametrization::trainable() const {
  std::vector<const Matrix*> out;
  for (const Matrix* m : J.trainable()) out.push_back(m);
  for (const Matrix* m : R.trainable()) out.push_back(m);
  for (const Matrix* m : B.trainable()) out.push_back(m);
  for (const Matrix* m : H.trainable()) out.push_back(m);
  return out;
}

long Parametrization::param_count() const {
  return J.param_count() + R.param_count() + B.param_count() + H.param_count();
}

void Parametrization::validate() const {
  if (n < 1 || m < 1) throw ConfigError("Parametrization: dimensions must be positive");
  if (J.out_len != n * n || R.out_len != n * n || B.out_len != n * m)
    throw ConfigError("Parametrization: block output lengths inconsistent with dims");
  if (H.n != n) throw ConfigError("Parametrization: Hamiltonian dimension mismatch");
}

// ---------------------------------------------------------------------------
// Graph assembly
// ---------------------------------------------------------------------------

namespace {

LiftedBlock lift_matrix_block(Tape& tape, const MatrixBlock& b, std::vector<Var>* flat) {
  LiftedBlock v;
  switch (b.kind) {
    case BlockKind::free_mlp: v.mlp = lift(tape, b.mlp_w); break;
    case BlockKind::free_kan: v.kan = lift(tape, b.kan_w); break;
    case BlockKind::ansatz: v.pri = tape.leaf(b.pri); break;
    case BlockKind::constant: v.theta_const = tape.leaf(b.theta_const); break;
  }
  if (flat) {
    switch (b.kind) {
      case BlockKind::free_mlp:
        for (auto& g : {v.mlp.w, v.mlp.b, v.mlp.ln_scale, v.mlp.ln_offset})
          for (Var x : g) flat->push_back(x);
        break;
      case BlockKind::free_kan:
        for (auto& g : {v.kan.base_w, v.kan.spline_scale, v.kan.spline_coef})
          for (Var x : g) flat->push_back(x);
        break;
      case BlockKind::ansatz: flat->push_back(v.pri); break;
      case BlockKind::constant: flat->push_back(v.theta_const); break;
    }
  }
  return v;
}

LiftedBlock lift_ham_block(Tape& tape, const HamiltonianBlock& b, std::vector<Var>* flat) {
  LiftedBlock v;
  switch (b.kind) {
    case HamKind::free_mlp: v.mlp = lift(tape, b.mlp_w); break;
    case HamKind::free_kan: v.kan = lift(tape, b.kan_w); break;
    case HamKind::ansatz: v.pri = tape.leaf(b.pri); break;
    case HamKind::quadratic: v.theta_q = tape.leaf(b.theta_q); break;
    case HamKind::shifted_quadratic:
      v.theta_q = tape.leaf(b.theta_q);
      v.shift = tape.leaf(b.shift);
      break;
  }
  if (flat) {
    switch (b.kind) {
      case HamKind::free_mlp:
        for (auto& g : {v.mlp.w, v.mlp.b, v.mlp.ln_scale, v.mlp.ln_offset})
          for (Var x : g) flat->push_back(x);
        break;
      case HamKind::free_kan:
        for (auto& g : {v.kan.base_w, v.kan.spline_scale, v.kan.spline_coef})
          for (Var x : g) flat->push_back(x);
        break;
      case HamKind::ansatz: flat->push_back(v.pri); break;
      case HamKind::quadratic: flat->push_back(v.theta_q); break;
      case HamKind::shifted_quadratic:
        flat->push_back(v.theta_q);
        flat->push_back(v.shift);
        break;
    }
  }
  return v;
}

}  // namespace

LiftedParametrization lift(Tape& tape, const Parametrization& p, std::vector<Var>* flat) {
  LiftedParametrization out;
  out.J = lift_matrix_block(tape, p.J, flat);
  out.R = lift_matrix_block(tape, p.R, flat);
  out.B = lift_matrix_block(tape, p.B, flat);
  out.H = lift_ham_block(tape, p.H, flat);
  return out;
}

Var build_theta(Tape& tape, const MatrixBlock& block, const LiftedBlock& vars, Var x_std) {
  switch (block.kind) {
    case BlockKind::free_mlp: return mlp_forward(block.mlp_cfg, vars.mlp, x_std);
    case BlockKind::free_kan: return kan_forward(block.kan_cfg, vars.kan, x_std);
    case BlockKind::ansatz: {
      Var feats = block.aset.build(tape, x_std);
      return matmul(feats, transpose(vars.pri));
    }
    case BlockKind::constant: return repeat_rows(vars.theta_const, x_std.value().rows());
  }
  throw ConfigError("build_theta: unknown kind");
}

namespace {

/// grad = (1/sqrt(n)) M M^T x with M = vtf(theta_q), per batch row.
Var quadratic_gradient(Tape& tape, Var theta_q, Var x_std, int n) {
  Var rep = repeat_rows(theta_q, x_std.value().rows());
  Var mtx = batch_matvec_t(rep, x_std, n, n);
  Var mmx = batch_matvec(rep, mtx, n, n);
  (void)tape;
  return scale_add(mmx, 1.0 / std::sqrt(static_cast<double>(n)), 0.0);
}

}  // namespace

HamiltonianNodes build_hamiltonian(Tape& tape, const HamiltonianBlock& block,
                                   const LiftedBlock& vars, Var x_std) {
  const int n = block.n;
  switch (block.kind) {
    case HamKind::free_mlp:
    case HamKind::free_kan:
    case HamKind::ansatz: {
      Var H{};
      if (block.kind == HamKind::free_mlp) {
        H = mlp_forward(block.mlp_cfg, vars.mlp, x_std);
      } else if (block.kind == HamKind::free_kan) {
        H = kan_forward(block.kan_cfg, vars.kan, x_std);
      } else {
        H = matmul(block.aset.build(tape, x_std), transpose(vars.pri));
      }
      // Per-sample input gradient: every row of H depends only on its own
      // row of x_std, so the gradient of the batch sum is the batch of
      // gradients. The adjoint nodes stay differentiable w.r.t. weights.
      std::vector<Var> wrt{x_std};
      Var grad = tape.gradient(full_sum(H), wrt)[0];
      return {H, grad};
    }
    case HamKind::quadratic: {
      Var grad = quadratic_gradient(tape, vars.theta_q, x_std, n);
      Var H = scale_add(row_sum(mul(x_std, grad)), 0.5, 0.0);
      return {H, grad};
    }
    case HamKind::shifted_quadratic: {
      Var grad_q = quadratic_gradient(tape, vars.theta_q, x_std, n);
      Var H = add(scale_add(row_sum(mul(x_std, grad_q)), 0.5, 0.0),
                  row_sum(mul(x_std, vars.shift)));
      Var grad = add(grad_q, vars.shift);
      return {H, grad};
    }
  }
  throw ConfigError("build_hamiltonian: unknown kind");
}

Matrix eval_theta(const MatrixBlock& block, const Matrix& x_std) {
  Tape t;
  LiftedBlock vars = lift_matrix_block(t, block, nullptr);
  return build_theta(t, block, vars, t.leaf(x_std)).value();
}

HamiltonianValue eval_H_and_grad(const HamiltonianBlock& block, const Matrix& x_std) {
  Tape t;
  LiftedBlock vars = lift_ham_block(t, block, nullptr);
  HamiltonianNodes nodes = build_hamiltonian(t, block, vars, t.leaf(x_std));
  return {nodes.H.value()(0, 0), nodes.grad_std.value()};
}

}  // namespace phid
