#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "phid/rng.hpp"
#include "phid/tensor.hpp"

namespace phid {

/// Closed-form ground-truth pH system. States and inputs are 1 x n / 1 x m
/// rows; J, R are n x n, B is n x m.
struct BenchmarkSystem {
  std::string name;
  int n = 0;
  int m = 0;
  std::function<Matrix(const Matrix&)> J;
  std::function<Matrix(const Matrix&)> R;
  std::function<Matrix(const Matrix&)> B;
  std::function<double(const Matrix&)> H;
  std::function<Matrix(const Matrix&)> gradH;
  std::vector<std::pair<double, double>> init_box;
  double amplitude = 1.0;

  /// (xdot, y) = ((J - R) gradH + B u, B^T gradH).
  std::pair<Matrix, Matrix> dynamics(const Matrix& x, const Matrix& u) const;
};

/// Interconnected mass-spring chain with cubic damping.
BenchmarkSystem spring_system();
/// Parameter override used for the undamped conservation checks.
BenchmarkSystem spring_system(double m1, double m2, double b1, double b2, double k1, double k2);

/// Magnetically levitated ball with position-dependent inductance.
BenchmarkSystem ball_system();

/// Permanent magnet synchronous motor in dq coordinates.
BenchmarkSystem pmsm_system();

const std::vector<std::string>& benchmark_names();
/// Lookup by registry name; "motor" is accepted as an alias for "pmsm".
BenchmarkSystem benchmark_by_name(const std::string& name);

/// Multisine excitation: per channel sum_{k=1..N} a sin(2 pi k f0 t + phi_k).
struct InputSignal {
  double amplitude = 1.0;
  double f0 = 0.1;
  int harmonics = 40;
  Matrix phases;  // channels x harmonics

  /// Independent uniform phases in [0, 2pi) per channel and harmonic.
  static InputSignal sample(int channels, double amplitude, Rng& rng);
  Matrix value(double t) const;  // 1 x channels
};

/// Componentwise uniform draw from the system's initial-state box.
Matrix sample_initial_state(const BenchmarkSystem& sys, Rng& rng);

}  // namespace phid
