#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phid/nets.hpp"
#include "phid/tape.hpp"

namespace phid {

// ---------------------------------------------------------------------------
// vtf reshaping and the structured matrix assemblies built on it.
// ---------------------------------------------------------------------------

/// Column-major reshape of a length n*m row vector into an n x m matrix:
/// entry (i,j) = v[j*n + i].
Matrix vtf(const Matrix& v, int n, int m);

/// Inverse of vtf: column-major flatten into a 1 x (n*m) row.
Matrix vtf_flatten(const Matrix& m);

/// J = vtf(theta)^T - vtf(theta); exactly skew-symmetric.
Matrix assemble_J(const Matrix& theta, int n);

/// R = (1/sqrt(n)) vtf(theta) vtf(theta)^T; symmetric positive semidefinite.
Matrix assemble_R(const Matrix& theta, int n);

/// B = vtf(theta); unconstrained.
Matrix assemble_B(const Matrix& theta, int n, int m);

// ---------------------------------------------------------------------------
// Ansatz dictionaries for the prior parametrization.
// ---------------------------------------------------------------------------

/// One scalar ansatz function: a monomial prod_i x_i^e_i over the
/// standardized state.
struct AnsatzFunction {
  std::vector<int> exponents;

  int total_degree() const {
    int d = 0;
    for (int e : exponents) d += e;
    return d;
  }
};

struct AnsatzSet {
  int input_dim = 0;
  std::vector<AnsatzFunction> fns;

  /// Just the constant function {1}.
  static AnsatzSet constant(int input_dim);
  /// All monomials of total degree <= max_degree, constant first, then
  /// graded lexicographic.
  static AnsatzSet monomials(int input_dim, int max_degree);

  int size() const { return static_cast<int>(fns.size()); }
  int max_degree() const;

  /// Plain evaluation: batch x input_dim -> batch x size().
  Matrix eval(const Matrix& x) const;
  /// Graph evaluation with gradients through x.
  Var build(Tape& tape, Var x) const;
};

/// theta(x) = weights * a(x) for constant weight matrices; the workhorse of
/// the prior parametrization. weights is (out_len x N), feats (batch x N).
Matrix eval_ansatz_block(const Matrix& weights, const AnsatzSet& a, const Matrix& x);

// ---------------------------------------------------------------------------
// Per-block parametrizations.
// ---------------------------------------------------------------------------

enum class BlockKind { free_mlp, free_kan, ansatz, constant };
enum class HamKind { free_mlp, free_kan, ansatz, quadratic, shifted_quadratic };

std::string to_string(BlockKind k);
std::string to_string(HamKind k);
BlockKind block_kind_from_string(const std::string& s);
HamKind ham_kind_from_string(const std::string& s);

/// Parametrization of one matrix-valued coefficient (J, R or B). Produces a
/// theta vector of length out_len per state; the assembly into the actual
/// matrix happens in the model.
struct MatrixBlock {
  BlockKind kind = BlockKind::free_mlp;
  int out_len = 0;

  MLPConfig mlp_cfg;
  MLPWeights mlp_w;
  KANConfig kan_cfg;
  KANWeights kan_w;
  AnsatzSet aset;
  Matrix pri;          // (out_len x N) ansatz weights
  Matrix theta_const;  // (1 x out_len)

  static MatrixBlock make_free_mlp(int in_dim, int out_len, std::uint64_t seed,
                                   int hidden_layers = 3, int hidden_width = 64);
  static MatrixBlock make_free_kan(int in_dim, int out_len, std::uint64_t seed);
  static MatrixBlock make_ansatz(const AnsatzSet& a, int out_len);
  static MatrixBlock make_constant(int out_len);

  std::vector<Matrix*> trainable();
  std::vector<const Matrix*> trainable() const;
  long param_count() const;
};

/// Parametrization of the Hamiltonian. The quadratic kinds guarantee
/// H(x) = 1/2 x^T Q x (+ b^T x) with Q a PSD Gram matrix.
struct HamiltonianBlock {
  HamKind kind = HamKind::free_mlp;
  int n = 0;

  MLPConfig mlp_cfg;
  MLPWeights mlp_w;
  KANConfig kan_cfg;
  KANWeights kan_w;
  AnsatzSet aset;
  Matrix pri;      // (1 x N)
  Matrix theta_q;  // (1 x n^2)
  Matrix shift;    // (1 x n)

  static HamiltonianBlock make_free_mlp(int n, std::uint64_t seed, int hidden_layers = 3,
                                        int hidden_width = 64);
  static HamiltonianBlock make_free_kan(int n, std::uint64_t seed);
  static HamiltonianBlock make_ansatz(const AnsatzSet& a, int n);
  static HamiltonianBlock make_quadratic(int n, std::uint64_t seed);
  static HamiltonianBlock make_shifted_quadratic(int n, std::uint64_t seed);

  std::vector<Matrix*> trainable();
  std::vector<const Matrix*> trainable() const;
  long param_count() const;
};

/// Full pH parametrization: theta functions for J, R, B plus the
/// Hamiltonian, all consuming the standardized state.
struct Parametrization {
  int n = 0;
  int m = 0;
  MatrixBlock J, R, B;
  HamiltonianBlock H;

  std::vector<Matrix*> trainable();
  std::vector<const Matrix*> trainable() const;
  long param_count() const;
  void validate() const;
};

// ---------------------------------------------------------------------------
// Graph assembly.
// ---------------------------------------------------------------------------

struct LiftedBlock {
  MLPVars mlp;
  KANVars kan;
  Var pri;
  Var theta_const;
  Var theta_q;
  Var shift;
};

struct LiftedParametrization {
  LiftedBlock J, R, B, H;
};

/// Create tape leaves for every trainable buffer, in trainable() order.
/// `flat` is aligned with Parametrization::trainable().
LiftedParametrization lift(Tape& tape, const Parametrization& p, std::vector<Var>* flat = nullptr);

/// theta values for a batch of standardized states (batch x out_len).
Var build_theta(Tape& tape, const MatrixBlock& block, const LiftedBlock& vars, Var x_std);

struct HamiltonianNodes {
  Var H;         // batch x 1
  Var grad_std;  // batch x n, gradient w.r.t. the standardized state
};

/// Hamiltonian and its input gradient for a batch of standardized states.
/// For the free kinds the gradient is produced by the autodiff engine and
/// remains differentiable w.r.t. the weights.
HamiltonianNodes build_hamiltonian(Tape& tape, const HamiltonianBlock& block,
                                   const LiftedBlock& vars, Var x_std);

// ---------------------------------------------------------------------------
// Plain single-state evaluation (tests, scatter analysis, rollouts).
// ---------------------------------------------------------------------------

/// theta(x_std) for one standardized state (1 x n) -> (1 x out_len).
Matrix eval_theta(const MatrixBlock& block, const Matrix& x_std);

/// H and the gradient of H w.r.t. the standardized state, for one state.
struct HamiltonianValue {
  double H;
  Matrix grad_std;  // 1 x n
};
HamiltonianValue eval_H_and_grad(const HamiltonianBlock& block, const Matrix& x_std);

}  // namespace phid
