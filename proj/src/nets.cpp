#include "phid/nets.hpp"

#include <cmath>

#include "phid/rng.hpp"

namespace phid {

namespace {

void fill_uniform(Matrix& m, Rng& rng, double lo, double hi) {
  for (size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(lo, hi);
}

std::vector<int> layer_dims(int in_dim, int hidden_layers, int hidden_width, int out_dim) {
  std::vector<int> dims{in_dim};
  for (int l = 0; l < hidden_layers; ++l) dims.push_back(hidden_width);
  dims.push_back(out_dim);
  return dims;
}

}  // namespace

void MLPConfig::validate() const {
  if (in_dim < 1 || out_dim < 1) throw ConfigError("MLP: dimensions must be positive");
  if (hidden_layers < 1) throw ConfigError("MLP: need at least one hidden layer");
  if (hidden_width < 1) throw ConfigError("MLP: hidden width must be positive");
}

void KANConfig::validate() const {
  if (in_dim < 1 || out_dim < 1) throw ConfigError("KAN: dimensions must be positive");
  if (hidden_layers < 1) throw ConfigError("KAN: need at least one hidden layer");
  if (hidden_width < 1) throw ConfigError("KAN: hidden width must be positive");
  if (grid_size < spline_order + 1) throw ConfigError("KAN: grid_size must be >= spline_order + 1");
}

std::vector<Matrix*> MLPWeights::buffers() {
  std::vector<Matrix*> out;
  for (auto& m : w) out.push_back(&m);
  for (auto& m : b) out.push_back(&m);
  for (auto& m : ln_scale) out.push_back(&m);
  for (auto& m : ln_offset) out.push_back(&m);
  return out;
}

std::vector<const Matrix*> MLPWeights::buffers() const {
  std::vector<const Matrix*> out;
  for (auto& m : w) out.push_back(&m);
  for (auto& m : b) out.push_back(&m);
  for (auto& m : ln_scale) out.push_back(&m);
  for (auto& m : ln_offset) out.push_back(&m);
  return out;
}

std::vector<Matrix*> KANWeights::buffers() {
  std::vector<Matrix*> out;
  for (auto& m : base_w) out.push_back(&m);
  for (auto& m : spline_scale) out.push_back(&m);
  for (auto& m : spline_coef) out.push_back(&m);
  return out;
}

std::vector<const Matrix*> KANWeights::buffers() const {
  std::vector<const Matrix*> out;
  for (auto& m : base_w) out.push_back(&m);
  for (auto& m : spline_scale) out.push_back(&m);
  for (auto& m : spline_coef) out.push_back(&m);
  return out;
}

double swish_value(double x) { return x / (1.0 + std::exp(-x)); }

Var layer_norm(Var v, Var scale, Var offset) {
  Var centered = sub(v, row_mean(v));
  Var var = scale_add(row_sum(square(centered)), 1.0 / v.value().cols(), 0.0);
  Var inv_std = pow_const(scale_add(var, 1.0, 1e-5), -0.5);
  return add(mul(mul(centered, inv_std), scale), offset);
}

MLPVars lift(Tape& tape, const MLPWeights& weights) {
  MLPVars v;
  for (const auto& m : weights.w) v.w.push_back(tape.leaf(m));
  for (const auto& m : weights.b) v.b.push_back(tape.leaf(m));
  for (const auto& m : weights.ln_scale) v.ln_scale.push_back(tape.leaf(m));
  for (const auto& m : weights.ln_offset) v.ln_offset.push_back(tape.leaf(m));
  return v;
}

KANVars lift(Tape& tape, const KANWeights& weights) {
  KANVars v;
  for (const auto& m : weights.base_w) v.base_w.push_back(tape.leaf(m));
  for (const auto& m : weights.spline_scale) v.spline_scale.push_back(tape.leaf(m));
  for (const auto& m : weights.spline_coef) v.spline_coef.push_back(tape.leaf(m));
  return v;
}

Var mlp_forward(const MLPConfig& cfg, const MLPVars& vars, Var x) {
  if (x.value().cols() != cfg.in_dim) throw ShapeError("mlp_forward: input width mismatch");
  Var h = x;
  const int n_layers = cfg.hidden_layers + 1;
  for (int l = 0; l < n_layers; ++l) {
    Var z = add(matmul(h, vars.w[l]), vars.b[l]);
    if (l == n_layers - 1) {
      h = z;  // linear output layer
    } else {
      Var a = swish(z);
      h = cfg.layer_norm ? layer_norm(a, vars.ln_scale[l], vars.ln_offset[l]) : a;
    }
  }
  return h;
}

Var kan_forward(const KANConfig& cfg, const KANVars& vars, Var x) {
  if (x.value().cols() != cfg.in_dim) throw ShapeError("kan_forward: input width mismatch");
  const kernels::SplineGrid grid = cfg.grid();
  const int nb = cfg.n_basis();
  Var h = x;
  const int n_layers = cfg.hidden_layers + 1;
  for (int l = 0; l < n_layers; ++l) {
    Var base = matmul(swish(h), vars.base_w[l]);
    Var feats = spline_basis(h, grid, 0);
    // per-edge activation: w_b swish(x) + w_s sum_i c_i B_i(x)
    Var eff = mul(block_repeat_cols(vars.spline_scale[l], nb), vars.spline_coef[l]);
    Var spl = matmul(feats, transpose(eff));
    h = add(base, spl);
  }
  return h;
}

Matrix mlp_forward(const MLPConfig& cfg, const MLPWeights& w, const Matrix& x) {
  Tape t;
  return mlp_forward(cfg, lift(t, w), t.leaf(x)).value();
}

Matrix kan_forward(const KANConfig& cfg, const KANWeights& w, const Matrix& x) {
  Tape t;
  return kan_forward(cfg, lift(t, w), t.leaf(x)).value();
}

MLPWeights init_weights(const MLPConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed(seed, 0x4d4c50));
  MLPWeights ws;
  const auto dims = layer_dims(cfg.in_dim, cfg.hidden_layers, cfg.hidden_width, cfg.out_dim);
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    Matrix W(dims[l], dims[l + 1]);
    const double bound = std::sqrt(1.0 / dims[l]);
    fill_uniform(W, rng, -bound, bound);
    ws.w.push_back(std::move(W));
    ws.b.emplace_back(1, dims[l + 1], 0.0);
  }
  if (cfg.layer_norm) {
    for (int l = 0; l < cfg.hidden_layers; ++l) {
      ws.ln_scale.emplace_back(1, cfg.hidden_width, 1.0);
      ws.ln_offset.emplace_back(1, cfg.hidden_width, 0.0);
    }
  }
  return ws;
}

KANWeights init_weights(const KANConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed(seed, 0x4b414e));
  KANWeights ws;
  const auto dims = layer_dims(cfg.in_dim, cfg.hidden_layers, cfg.hidden_width, cfg.out_dim);
  const int nb = cfg.n_basis();
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    ws.base_w.emplace_back(dims[l], dims[l + 1], 1.0);
    ws.spline_scale.emplace_back(dims[l + 1], dims[l], 1.0);
    Matrix C(dims[l + 1], dims[l] * nb);
    fill_uniform(C, rng, -0.1, 0.1);
    ws.spline_coef.push_back(std::move(C));
  }
  return ws;
}

long mlp_param_count(const MLPConfig& cfg) {
  long count = 0;
  const auto dims = layer_dims(cfg.in_dim, cfg.hidden_layers, cfg.hidden_width, cfg.out_dim);
  for (size_t l = 0; l + 1 < dims.size(); ++l)
    count += static_cast<long>(dims[l]) * dims[l + 1] + dims[l + 1];
  if (cfg.layer_norm) count += 2L * cfg.hidden_layers * cfg.hidden_width;
  return count;
}

long kan_param_count(const KANConfig& cfg) {
  long count = 0;
  const auto dims = layer_dims(cfg.in_dim, cfg.hidden_layers, cfg.hidden_width, cfg.out_dim);
  for (size_t l = 0; l + 1 < dims.size(); ++l)
    count += static_cast<long>(dims[l]) * dims[l + 1] * (2 + cfg.n_basis());
  return count;
}

}  // namespace phid
