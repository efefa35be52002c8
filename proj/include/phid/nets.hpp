#pragma once

#include <cstdint>
#include <vector>

#include "phid/tape.hpp"

namespace phid {

struct MLPConfig {
  int in_dim = 0;
  int out_dim = 0;
  int hidden_layers = 3;
  int hidden_width = 64;
  bool layer_norm = true;

  void validate() const;
};

struct KANConfig {
  int in_dim = 0;
  int out_dim = 0;
  int hidden_layers = 3;
  int hidden_width = 3;
  int grid_size = 5;
  int spline_order = 3;

  void validate() const;
  /// Uniform knots over [-3, 3] in standardized input space.
  kernels::SplineGrid grid() const {
    kernels::SplineGrid g;
    g.t0 = -3.0;
    g.h = 6.0 / grid_size;
    g.intervals = grid_size;
    g.degree = spline_order;
    return g;
  }
  int n_basis() const { return grid_size + spline_order; }
};

/// Weights of one MLP: per linear layer W (in x out) and b (1 x out), plus
/// layer-norm scale/offset (1 x width) per hidden layer when enabled.
struct MLPWeights {
  std::vector<Matrix> w;
  std::vector<Matrix> b;
  std::vector<Matrix> ln_scale;
  std::vector<Matrix> ln_offset;

  std::vector<Matrix*> buffers();
  std::vector<const Matrix*> buffers() const;
};

/// Weights of one KAN: per layer the swish-path weight (in x out), the
/// per-edge spline scale (out x in) and spline coefficients (out x in*n_basis).
struct KANWeights {
  std::vector<Matrix> base_w;
  std::vector<Matrix> spline_scale;
  std::vector<Matrix> spline_coef;

  std::vector<Matrix*> buffers();
  std::vector<const Matrix*> buffers() const;
};

double swish_value(double x);

/// (v - mean) / sqrt(var + 1e-5) per row, then elementwise scale and offset.
Var layer_norm(Var v, Var scale, Var offset);

/// Graph-level forwards; rows of x are independent samples. The Var lists
/// hold tape leaves in the same order as the weight buffers.
struct MLPVars {
  std::vector<Var> w, b, ln_scale, ln_offset;
};
struct KANVars {
  std::vector<Var> base_w, spline_scale, spline_coef;
};

MLPVars lift(Tape& tape, const MLPWeights& weights);
KANVars lift(Tape& tape, const KANWeights& weights);

Var mlp_forward(const MLPConfig& cfg, const MLPVars& vars, Var x);
Var kan_forward(const KANConfig& cfg, const KANVars& vars, Var x);

/// Single-sample convenience forwards (x is 1 x in_dim).
Matrix mlp_forward(const MLPConfig& cfg, const MLPWeights& w, const Matrix& x);
Matrix kan_forward(const KANConfig& cfg, const KANWeights& w, const Matrix& x);

/// Deterministic initialization. MLP weights are uniform within
/// +-sqrt(1/fan_in) with zero biases; KAN spline coefficients are uniform
/// within +-0.1 with unit base and spline scales.
MLPWeights init_weights(const MLPConfig& cfg, std::uint64_t seed);
KANWeights init_weights(const KANConfig& cfg, std::uint64_t seed);

long mlp_param_count(const MLPConfig& cfg);
long kan_param_count(const KANConfig& cfg);

}  // namespace phid
