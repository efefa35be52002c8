#include "phid/benchmarks.hpp"

#include <cmath>

#include "phid/errors.hpp"

namespace phid {

std::pair<Matrix, Matrix> BenchmarkSystem::dynamics(const Matrix& x, const Matrix& u) const {
  if (x.cols() != n || u.cols() != m) throw ShapeError("dynamics: dimension mismatch");
  const Matrix Jx = J(x);
  const Matrix Rx = R(x);
  const Matrix Bx = B(x);
  const Matrix g = gradH(x);  // 1 x n
  Matrix xdot(1, n, 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += (Jx(i, j) - Rx(i, j)) * g(0, j);
    for (int q = 0; q < m; ++q) acc += Bx(i, q) * u(0, q);
    xdot(0, i) = acc;
  }
  Matrix y(1, m, 0.0);
  for (int q = 0; q < m; ++q) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += Bx(i, q) * g(0, i);
    y(0, q) = acc;
  }
  return {xdot, y};
}

BenchmarkSystem spring_system(double m1, double m2, double b1, double b2, double k1, double k2) {
  BenchmarkSystem s;
  s.name = "spring";
  s.n = 4;
  s.m = 2;
  const Matrix J0 = Matrix::from_rows(
      {{0, 1, 0, 0}, {-1, 0, 1, 0}, {0, -1, 0, 1}, {0, 0, -1, 0}});
  const Matrix B0 = Matrix::from_rows({{0, 0}, {1, 0}, {0, 0}, {0, 1}});
  s.J = [J0](const Matrix&) { return J0; };
  s.B = [B0](const Matrix&) { return B0; };
  s.R = [b1, b2, m1, m2](const Matrix& x) {
    Matrix r(4, 4, 0.0);
    r(1, 1) = b1 * x(0, 1) * x(0, 1) / (m1 * m1);
    r(3, 3) = b2 * x(0, 3) * x(0, 3) / (m2 * m2);
    return r;
  };
  s.H = [m1, m2, k1, k2](const Matrix& x) {
    return x(0, 1) * x(0, 1) / (2 * m1) + k1 * x(0, 0) * x(0, 0) / 2 +
           x(0, 3) * x(0, 3) / (2 * m2) + k2 * x(0, 2) * x(0, 2) / 2;
  };
  s.gradH = [m1, m2, k1, k2](const Matrix& x) {
    Matrix g(1, 4);
    g(0, 0) = k1 * x(0, 0);
    g(0, 1) = x(0, 1) / m1;
    g(0, 2) = k2 * x(0, 2);
    g(0, 3) = x(0, 3) / m2;
    return g;
  };
  s.init_box = {{-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}};
  s.amplitude = 0.4;
  return s;
}

BenchmarkSystem spring_system() { return spring_system(1.0, 1.5, 2.0, 2.0, 1.0, 0.1); }

BenchmarkSystem ball_system() {
  BenchmarkSystem s;
  s.name = "ball";
  s.n = 3;
  s.m = 1;
  const double mass = 0.1;
  const double r_el = 0.1;  // electrical resistance; 1/R_el enters the dissipation
  const double drag = 1.0;
  const Matrix J0 = Matrix::from_rows({{0, 1, 0}, {-1, 0, 0}, {0, 0, 0}});
  const Matrix B0 = Matrix::from_rows({{0}, {0}, {1}});
  s.J = [J0](const Matrix&) { return J0; };
  s.B = [B0](const Matrix&) { return B0; };
  s.R = [drag, r_el](const Matrix& x) {
    Matrix r(3, 3, 0.0);
    r(1, 1) = drag * std::abs(x(0, 1));
    r(2, 2) = 1.0 / r_el;
    return r;
  };
  // H = x2^2/(2m) + x3^2 (0.1 + x1^2) / 2, i.e. x3^2/(2 L(x1))
  s.H = [mass](const Matrix& x) {
    return x(0, 1) * x(0, 1) / (2 * mass) +
           0.5 * x(0, 2) * x(0, 2) * (0.1 + x(0, 0) * x(0, 0));
  };
  s.gradH = [mass](const Matrix& x) {
    Matrix g(1, 3);
    g(0, 0) = x(0, 2) * x(0, 2) * x(0, 0);
    g(0, 1) = x(0, 1) / mass;
    g(0, 2) = x(0, 2) * (0.1 + x(0, 0) * x(0, 0));
    return g;
  };
  s.init_box = {{-0.5, 2.0}, {-0.2, 0.2}, {-3.0, 5.0}};
  s.amplitude = 1.0;
  return s;
}

BenchmarkSystem pmsm_system() {
  BenchmarkSystem s;
  s.name = "pmsm";
  s.n = 3;
  s.m = 2;
  const double j_m = 0.012;
  const double l_ind = 3.8e-3;
  const double beta = 0.0026;
  const double r_st = 0.225;
  const double phi_pm = 0.17;
  s.J = [phi_pm](const Matrix& x) {
    const double phi_d = x(0, 0), phi_q = x(0, 1);
    Matrix j(3, 3, 0.0);
    j(0, 2) = phi_q;
    j(1, 2) = -phi_d - phi_pm;
    j(2, 0) = -phi_q;
    j(2, 1) = phi_d + phi_pm;
    return j;
  };
  s.R = [r_st, beta](const Matrix&) {
    Matrix r(3, 3, 0.0);
    r(0, 0) = r_st;
    r(1, 1) = r_st;
    r(2, 2) = beta;
    return r;
  };
  const Matrix B0 = Matrix::from_rows({{1, 0}, {0, 1}, {0, 0}});
  s.B = [B0](const Matrix&) { return B0; };
  s.H = [l_ind, j_m](const Matrix& x) {
    return x(0, 0) * x(0, 0) / (2 * l_ind) + x(0, 1) * x(0, 1) / (2 * l_ind) +
           x(0, 2) * x(0, 2) / (2 * j_m);
  };
  s.gradH = [l_ind, j_m](const Matrix& x) {
    Matrix g(1, 3);
    g(0, 0) = x(0, 0) / l_ind;
    g(0, 1) = x(0, 1) / l_ind;
    g(0, 2) = x(0, 2) / j_m;
    return g;
  };
  s.init_box = {{-0.5, 0.5}, {-0.5, 0.5}, {-1.0, 1.0}};
  s.amplitude = 5.0;
  return s;
}

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"spring", "ball", "pmsm"};
  return names;
}

BenchmarkSystem benchmark_by_name(const std::string& name) {
  if (name == "spring") return spring_system();
  if (name == "ball") return ball_system();
  if (name == "pmsm" || name == "motor") return pmsm_system();
  throw ConfigError("unknown system '" + name + "'; available: spring, ball, pmsm");
}

InputSignal InputSignal::sample(int channels, double amplitude, Rng& rng) {
  InputSignal sig;
  sig.amplitude = amplitude;
  sig.phases = Matrix(channels, sig.harmonics);
  for (int q = 0; q < channels; ++q)
    for (int k = 0; k < sig.harmonics; ++k) sig.phases(q, k) = rng.uniform(0.0, 2.0 * M_PI);
  return sig;
}

Matrix InputSignal::value(double t) const {
  Matrix u(1, phases.rows(), 0.0);
  for (int q = 0; q < phases.rows(); ++q) {
    double acc = 0.0;
    for (int k = 1; k <= harmonics; ++k)
      acc += amplitude * std::sin(2.0 * M_PI * k * f0 * t + phases(q, k - 1));
    u(0, q) = acc;
  }
  return u;
}

Matrix sample_initial_state(const BenchmarkSystem& sys, Rng& rng) {
  Matrix x(1, sys.n);
  for (int i = 0; i < sys.n; ++i) x(0, i) = rng.uniform(sys.init_box[i].first, sys.init_box[i].second);
  return x;
}

}  // namespace phid
