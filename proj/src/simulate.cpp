#include "phid/simulate.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "phid/errors.hpp"

namespace phid {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// y5 - y4 error coefficients.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output coefficients (Hairer's contd5).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

Matrix axpy(const Matrix& y, double h, std::initializer_list<std::pair<double, const Matrix*>> ks) {
  Matrix out = y;
  for (const auto& [coef, k] : ks)
    for (size_t i = 0; i < out.size(); ++i) out[i] += h * coef * (*k)[i];
  return out;
}

}  // namespace

std::vector<Matrix> integrate(const DynamicsFn& f, const Matrix& x0, double t_end, double dt_out,
                              const IntegrateOptions& opts) {
  if (dt_out <= 0.0) throw ConfigError("integrate: dt_out must be positive");
  const int n_out = static_cast<int>(std::llround(t_end / dt_out));
  std::vector<Matrix> out;
  out.reserve(n_out + 1);
  out.push_back(x0);

  double t = 0.0;
  Matrix y = x0;
  Matrix k1 = f(t, y);
  double h = std::min(opts.initial_step, t_end);
  int next_grid = 1;
  std::uint64_t steps = 0;

  while (next_grid <= n_out) {
    if (++steps > opts.max_steps) throw DivergenceError("integrate: step budget exhausted");
    if (h < 1e-14) throw DivergenceError("integrate: step size underflow at t=" + std::to_string(t));
    h = std::min(h, t_end - t);

    Matrix k2 = f(t + c2 * h, axpy(y, h, {{a21, &k1}}));
    Matrix k3 = f(t + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
    Matrix k4 = f(t + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    Matrix k5 = f(t + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    Matrix k6 =
        f(t + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    Matrix y1 = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    Matrix k7 = f(t + h, y1);  // FSAL

    double err = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * k7[i]);
      const double sc = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / y.size());
    if (!std::isfinite(err)) throw DivergenceError("integrate: non-finite state at t=" + std::to_string(t));

    if (err <= 1.0) {
      // Dense output for every grid point inside (t, t+h].
      Matrix rc2(1, y.cols()), rc3(1, y.cols()), rc4(1, y.cols()), rc5(1, y.cols());
      for (size_t i = 0; i < y.size(); ++i) {
        const double dy = y1[i] - y[i];
        rc2[i] = dy;
        rc3[i] = h * k1[i] - dy;
        rc4[i] = dy - h * k7[i] - rc3[i];
        rc5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      while (next_grid <= n_out && next_grid * dt_out <= t + h + 1e-12) {
        const double theta = std::min(1.0, std::max(0.0, (next_grid * dt_out - t) / h));
        const double th1 = 1.0 - theta;
        Matrix g(1, y.cols());
        for (size_t i = 0; i < y.size(); ++i)
          g[i] = y[i] + theta * (rc2[i] + th1 * (rc3[i] + theta * (rc4[i] + th1 * rc5[i])));
        out.push_back(std::move(g));
        ++next_grid;
      }
      t += h;
      y = std::move(y1);
      k1 = std::move(k7);
      const double fac = std::min(10.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
      h *= fac;
    } else {
      h *= std::min(1.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
    }
  }
  return out;
}

std::vector<Matrix> rk4_rollout(const DynamicsFn& f, const Matrix& x0, double dt, int steps) {
  if (dt <= 0.0) throw ConfigError("rk4_rollout: dt must be positive");
  std::vector<Matrix> out;
  out.reserve(steps + 1);
  out.push_back(x0);
  Matrix y = x0;
  for (int s = 0; s < steps; ++s) {
    const double t = s * dt;
    Matrix k1 = f(t, y);
    Matrix k2 = f(t + dt / 2, axpy(y, dt, {{0.5, &k1}}));
    Matrix k3 = f(t + dt / 2, axpy(y, dt, {{0.5, &k2}}));
    Matrix k4 = f(t + dt, axpy(y, dt, {{1.0, &k3}}));
    for (size_t i = 0; i < y.size(); ++i)
      y[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    if (!y.all_finite())
      throw DivergenceError("rk4_rollout: non-finite state at step " + std::to_string(s + 1));
    out.push_back(y);
  }
  return out;
}

Dataset generate_dataset(const BenchmarkSystem& sys, int n_traj, std::uint64_t seed, double t_end,
                         double dt) {
  if (n_traj < 1) throw ConfigError("generate_dataset: n_traj must be >= 1");
  Dataset ds;
  ds.system = sys.name;
  ds.n = sys.n;
  ds.m = sys.m;
  ds.dt = dt;
  ds.t_end = t_end;
  ds.amplitude = sys.amplitude;
  ds.seed = seed;
  const int samples = static_cast<int>(std::llround(t_end / dt)) + 1;

  ds.trajectories.resize(n_traj);
  for (int k = 0; k < n_traj; ++k) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    Trajectory& tr = ds.trajectories[k];
    tr.x0 = sample_initial_state(sys, rng);
    InputSignal sig = InputSignal::sample(sys.m, sys.amplitude, rng);
    tr.phases = sig.phases;

    DynamicsFn f = [&sys, &sig](double t, const Matrix& x) {
      return sys.dynamics(x, sig.value(t)).first;
    };
    std::vector<Matrix> states;
    try {
      states = integrate(f, tr.x0, t_end, dt);
    } catch (const DivergenceError& e) {
      throw DivergenceError("trajectory " + std::to_string(k) + " of " + sys.name +
                            " failed: " + e.what());
    }

    tr.times.resize(samples);
    tr.x = Matrix(samples, sys.n);
    tr.xdot = Matrix(samples, sys.n);
    tr.u = Matrix(samples, sys.m);
    tr.y = Matrix(samples, sys.m);
    for (int j = 0; j < samples; ++j) {
      const double t = j * dt;
      tr.times[j] = t;
      const Matrix& xj = states[j];
      const Matrix uj = sig.value(t);
      auto [xd, yj] = sys.dynamics(xj, uj);
      for (int i = 0; i < sys.n; ++i) {
        tr.x(j, i) = xj(0, i);
        tr.xdot(j, i) = xd(0, i);
      }
      for (int q = 0; q < sys.m; ++q) {
        tr.u(j, q) = uj(0, q);
        tr.y(j, q) = yj(0, q);
      }
    }
  }
  return ds;
}

std::vector<double> add_noise(const std::vector<double>& values, double snr_db, Rng& rng) {
  if (!std::isfinite(snr_db)) return values;
  double power = 0.0;
  for (double v : values) power += v * v;
  power /= values.empty() ? 1.0 : static_cast<double>(values.size());
  if (power <= 0.0) throw ConfigError("add_noise: series has zero power");
  const double alpha = std::sqrt(3.0 * power * std::pow(10.0, -snr_db / 10.0));
  std::vector<double> out(values.size());
  for (size_t i = 0; i < values.size(); ++i) out[i] = values[i] + rng.uniform(-alpha, alpha);
  return out;
}

void apply_noise(Dataset& ds, double snr_db) {
  Rng rng(mix_seed(ds.seed, 0xA015EULL));
  auto noisify = [&](int channels, auto get) {
    for (int q = 0; q < channels; ++q) {
      std::vector<double> series;
      for (auto& tr : ds.trajectories)
        for (int j = 0; j < static_cast<int>(tr.times.size()); ++j) series.push_back(get(tr)(j, q));
      std::vector<double> noisy = add_noise(series, snr_db, rng);
      size_t idx = 0;
      for (auto& tr : ds.trajectories)
        for (int j = 0; j < static_cast<int>(tr.times.size()); ++j) get(tr)(j, q) = noisy[idx++];
    }
  };
  noisify(ds.m, [](Trajectory& tr) -> Matrix& { return tr.u; });
  noisify(ds.m, [](Trajectory& tr) -> Matrix& { return tr.y; });
  ds.noisy = true;
  ds.snr_db = snr_db;
}

namespace {

constexpr char kDatasetMagic[8] = {'P', 'H', 'I', 'D', 'D', 'A', 'T', '1'};

void write_doubles(std::ofstream& f, const double* p, size_t count) {
  f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::ifstream& f, double* p, size_t count) {
  f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
  if (!f) throw FormatError("dataset file truncated");
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open for writing: " + path);
  nlohmann::json header{{"format", "phid-dataset"},
                        {"version", 1},
                        {"system", ds.system},
                        {"n", ds.n},
                        {"m", ds.m},
                        {"dt", ds.dt},
                        {"t_end", ds.t_end},
                        {"amplitude", ds.amplitude},
                        {"seed", ds.seed},
                        {"noisy", ds.noisy},
                        {"snr_db", ds.snr_db},
                        {"n_traj", ds.trajectories.size()},
                        {"samples", ds.trajectories.empty() ? 0 : ds.trajectories[0].times.size()},
                        {"harmonics",
                         ds.trajectories.empty() ? 0 : ds.trajectories[0].phases.cols()}};
  const std::string htext = header.dump();
  f.write(kDatasetMagic, 8);
  const std::uint64_t hlen = htext.size();
  f.write(reinterpret_cast<const char*>(&hlen), 8);
  f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& tr : ds.trajectories) {
    write_doubles(f, tr.x0.data(), tr.x0.size());
    write_doubles(f, tr.phases.data(), tr.phases.size());
    write_doubles(f, tr.times.data(), tr.times.size());
    write_doubles(f, tr.x.data(), tr.x.size());
    write_doubles(f, tr.xdot.data(), tr.xdot.size());
    write_doubles(f, tr.u.data(), tr.u.size());
    write_doubles(f, tr.y.data(), tr.y.size());
  }
  if (!f) throw Error("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open dataset: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kDatasetMagic, 8) != 0)
    throw FormatError("not a phid dataset file (or unsupported version): " + path);
  std::uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 8);
  std::string htext(hlen, '\0');
  f.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw FormatError("dataset header truncated");
  nlohmann::json header = nlohmann::json::parse(htext);
  if (header.value("version", 0) != 1) throw FormatError("unsupported dataset version");

  Dataset ds;
  ds.system = header.at("system").get<std::string>();
  ds.n = header.at("n").get<int>();
  ds.m = header.at("m").get<int>();
  ds.dt = header.at("dt").get<double>();
  ds.t_end = header.at("t_end").get<double>();
  ds.amplitude = header.at("amplitude").get<double>();
  ds.seed = header.at("seed").get<std::uint64_t>();
  ds.noisy = header.at("noisy").get<bool>();
  ds.snr_db = header.at("snr_db").get<double>();
  const size_t n_traj = header.at("n_traj").get<size_t>();
  const size_t samples = header.at("samples").get<size_t>();
  const int harmonics = header.at("harmonics").get<int>();

  ds.trajectories.resize(n_traj);
  for (auto& tr : ds.trajectories) {
    tr.x0 = Matrix(1, ds.n);
    tr.phases = Matrix(ds.m, harmonics);
    tr.times.resize(samples);
    tr.x = Matrix(static_cast<int>(samples), ds.n);
    tr.xdot = Matrix(static_cast<int>(samples), ds.n);
    tr.u = Matrix(static_cast<int>(samples), ds.m);
    tr.y = Matrix(static_cast<int>(samples), ds.m);
    read_doubles(f, tr.x0.data(), tr.x0.size());
    read_doubles(f, tr.phases.data(), tr.phases.size());
    read_doubles(f, tr.times.data(), tr.times.size());
    read_doubles(f, tr.x.data(), tr.x.size());
    read_doubles(f, tr.xdot.data(), tr.xdot.size());
    read_doubles(f, tr.u.data(), tr.u.size());
    read_doubles(f, tr.y.data(), tr.y.size());
  }
  return ds;
}

void export_dataset_csv(const Dataset& ds, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (size_t k = 0; k < ds.trajectories.size(); ++k) {
    const Trajectory& tr = ds.trajectories[k];
    char name[64];
    std::snprintf(name, sizeof(name), "traj_%04zu.csv", k);
    std::ofstream f(std::filesystem::path(dir) / name);
    f << "t";
    for (int i = 0; i < ds.n; ++i) f << ",x" << i + 1;
    for (int i = 0; i < ds.n; ++i) f << ",xdot" << i + 1;
    for (int q = 0; q < ds.m; ++q) f << ",u" << q + 1;
    for (int q = 0; q < ds.m; ++q) f << ",y" << q + 1;
    f << "\n";
    char buf[32];
    for (size_t j = 0; j < tr.times.size(); ++j) {
      auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        f << ',' << buf;
      };
      std::snprintf(buf, sizeof(buf), "%.17g", tr.times[j]);
      f << buf;
      for (int i = 0; i < ds.n; ++i) put(tr.x(static_cast<int>(j), i));
      for (int i = 0; i < ds.n; ++i) put(tr.xdot(static_cast<int>(j), i));
      for (int q = 0; q < ds.m; ++q) put(tr.u(static_cast<int>(j), q));
      for (int q = 0; q < ds.m; ++q) put(tr.y(static_cast<int>(j), q));
      f << "\n";
    }
  }
}

}  // namespace phid
