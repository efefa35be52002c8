#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "phid/benchmarks.hpp"
#include "phid/tensor.hpp"

namespace phid {

/// Time-dependent vector field on row states: f(t, x) with x, result 1 x n.
using DynamicsFn = std::function<Matrix(double, const Matrix&)>;

struct IntegrateOptions {
  double rtol = 1e-8;
  double atol = 1e-8;
  double initial_step = 1e-3;
  std::uint64_t max_steps = 50'000'000;
};

/// Adaptive Dormand-Prince 5(4) with dense output, sampled on the uniform
/// grid t_j = j*dt_out for j = 0..round(t_end/dt_out). Throws
/// DivergenceError on step-size underflow or non-finite states.
std::vector<Matrix> integrate(const DynamicsFn& f, const Matrix& x0, double t_end, double dt_out,
                              const IntegrateOptions& opts = {});

/// Classical fixed-step RK4; stages evaluate f at t, t+dt/2 and t+dt.
/// Returns steps+1 states including x0. Throws DivergenceError with the
/// step index if the state leaves the finite range.
std::vector<Matrix> rk4_rollout(const DynamicsFn& f, const Matrix& x0, double dt, int steps);

/// One recorded trajectory on the uniform grid.
struct Trajectory {
  Matrix x0;      // 1 x n
  Matrix phases;  // m x harmonics, the input draw
  std::vector<double> times;
  Matrix x;     // T x n
  Matrix xdot;  // T x n, from the true system equations at the grid points
  Matrix u;     // T x m
  Matrix y;     // T x m
};

struct Dataset {
  std::string system;
  int n = 0;
  int m = 0;
  double dt = 0.01;
  double t_end = 10.0;
  double amplitude = 1.0;
  std::uint64_t seed = 0;
  bool noisy = false;
  double snr_db = 0.0;
  std::vector<Trajectory> trajectories;

  size_t total_points() const {
    size_t s = 0;
    for (const auto& t : trajectories) s += t.times.size();
    return s;
  }
};

/// Simulate n_traj trajectories of the true system under fresh multisine
/// inputs and initial states. Per-trajectory rng streams derive from
/// (seed, trajectory index), so the result is reproducible bitwise.
Dataset generate_dataset(const BenchmarkSystem& sys, int n_traj, std::uint64_t seed,
                         double t_end = 10.0, double dt = 0.01);

/// Additive i.i.d. uniform noise on [-alpha, alpha] with
/// alpha = sqrt(3 P 10^(-snr/10)) where P is the mean square of the series.
std::vector<double> add_noise(const std::vector<double>& values, double snr_db, Rng& rng);

/// Apply add_noise to the inputs and outputs of the dataset, channel by
/// channel over the concatenated trajectories. States and derivatives stay
/// clean.
void apply_noise(Dataset& ds, double snr_db);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

/// One CSV per trajectory (t, x, xdot, u, y), for plotting.
void export_dataset_csv(const Dataset& ds, const std::string& dir);

}  // namespace phid
