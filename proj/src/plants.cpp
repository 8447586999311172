#include "sdyn/plants.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace sdyn {

Eigen::Vector2d two_tank_rhs(const TwoTankParams& p, const Eigen::Vector2d& h,
                             double v_p) {
  const double s1 = std::sqrt(std::max(h[0], 0.0));
  const double s2 = std::sqrt(std::max(h[1], 0.0));
  return {-p.k1 * s1 + p.k4 * v_p, p.k2 * s1 - p.k3 * s2};
}

namespace {

template <class Rhs, class State>
State rk4_substep(const Rhs& rhs, const State& x, double h) {
  State k1 = rhs(x);
  State k2 = rhs(x + 0.5 * h * k1);
  State k3 = rhs(x + 0.5 * h * k2);
  State k4 = rhs(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Eigen::Vector2d two_tank_step(const TwoTankParams& p, const Eigen::Vector2d& h,
                              double v_p, double dt, int substeps) {
  if (substeps < 1) throw std::invalid_argument("two_tank_step: substeps >= 1");
  Eigen::Vector2d x = h;
  const double hs = dt / substeps;
  auto rhs = [&](const Eigen::Vector2d& s) { return two_tank_rhs(p, s, v_p); };
  for (int k = 0; k < substeps; ++k) {
    x = rk4_substep(rhs, x, hs);
    x = x.cwiseMax(0.0);
  }
  return x;
}

DynMap two_tank_map(const TwoTankParams& p, double dt, int substeps) {
  return [p, dt, substeps](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    Eigen::Vector2d h(x[0], x[1]);
    return Eigen::VectorXd(two_tank_step(p, h, u[0], dt, substeps));
  };
}

SignPattern two_tank_pattern() {
  SignPattern p = SignPattern::unconstrained(2, 1);
  p.state(0, 0) = SignSet::nonneg();
  p.state(0, 1) = SignSet::only_zero();
  p.state(1, 0) = SignSet::nonneg();
  p.state(1, 1) = SignSet::nonneg();
  p.input(0, 0) = SignSet::nonneg();
  p.input(1, 0) = SignSet::only_zero();
  p.s_zero[0] = SignSet::only_zero();
  p.s_zero[1] = SignSet::only_zero();
  return p;
}

Eigen::Vector3d powertrain_rhs(const PowertrainParams& p, const Eigen::Vector3d& x,
                               const Eigen::Vector3d& u) {
  const double tau_ds = x[0], v = x[1];
  const double tau_cmd = u[0], tau_mot = u[1], tau_brk = u[2];
  // smooth saturation vanishing at standstill
  const double sat = std::tanh(std::max(v, 0.0) / 0.1);
  const double d_tau = (p.engine_gain * tau_cmd - tau_ds) / p.engine_lag;
  const double d_v = ((tau_ds + tau_mot) / p.ratio - (tau_brk / p.ratio) * sat -
                      p.c0 * sat - p.c1 * v - p.c2 * v * v) /
                     p.inertia;
  const double power = tau_mot * v;
  const double eff = power < 0.0 ? p.regen_eff : 1.0;
  const double d_s = -p.soc_coeff * power * eff;
  return {d_tau, d_v, d_s};
}

Eigen::Vector3d powertrain_step(const PowertrainParams& p, const Eigen::Vector3d& x,
                                const Eigen::Vector3d& u, double dt, int substeps) {
  if (substeps < 1) throw std::invalid_argument("powertrain_step: substeps >= 1");
  Eigen::Vector3d s = x;
  const double hs = dt / substeps;
  auto rhs = [&](const Eigen::Vector3d& xx) { return powertrain_rhs(p, xx, u); };
  for (int k = 0; k < substeps; ++k) {
    s = rk4_substep(rhs, s, hs);
    s[1] = std::max(s[1], 0.0);
    s[2] = std::clamp(s[2], 0.0, 1.0);
  }
  return s;
}

DynMap powertrain_map(const PowertrainParams& p, double dt, int substeps) {
  return [p, dt, substeps](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    Eigen::Vector3d xs(x[0], x[1], x[2]);
    Eigen::Vector3d us(u[0], u[1], u[2]);
    return Eigen::VectorXd(powertrain_step(p, xs, us, dt, substeps));
  };
}

SignPattern powertrain_pattern() {
  SignPattern p = SignPattern::unconstrained(3, 3);
  p.input(0, 0) = SignSet::nonneg();
  p.input(0, 1) = SignSet::only_zero();
  p.input(0, 2) = SignSet::only_zero();
  p.input(1, 0) = SignSet::nonneg();
  p.input(1, 1) = SignSet::nonneg();
  p.input(1, 2) = SignSet::nonpos();
  p.input(2, 0) = SignSet::only_zero();
  p.input(2, 1) = SignSet::nonpos();
  p.input(2, 2) = SignSet::only_zero();
  p.s_zero[0] = SignSet::only_zero();
  p.s_zero[1] = SignSet::only_zero();
  p.s_zero[2] = SignSet::only_zero();
  return p;
}

Eigen::MatrixXd generate_signal(const SignalProtocol& protocol, int n_steps,
                                std::mt19937_64& rng) {
  const int n_u = protocol.n_u();
  Eigen::MatrixXd sig(n_steps, n_u);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  if (protocol.kind == SignalProtocol::Kind::square_wave) {
    std::uniform_int_distribution<int> half(protocol.hold_min, protocol.hold_max);
    for (int j = 0; j < n_u; ++j) {
      const int period = half(rng);
      int t = 0;
      while (t < n_steps) {
        const double level =
            protocol.amp_lo[j] + (protocol.amp_hi[j] - protocol.amp_lo[j]) * unit(rng);
        for (int k = 0; k < period && t < n_steps; ++k, ++t) sig(t, j) = level;
      }
    }
  } else {
    std::uniform_int_distribution<int> dur(protocol.ramp_min, protocol.ramp_max);
    for (int j = 0; j < n_u; ++j) {
      double level = 0.0;
      int t = 0;
      while (t < n_steps) {
        const double target =
            protocol.amp_lo[j] + (protocol.amp_hi[j] - protocol.amp_lo[j]) * unit(rng);
        const int ramp = dur(rng);
        const int hold = dur(rng);
        for (int k = 1; k <= ramp && t < n_steps; ++k, ++t)
          sig(t, j) = level + (target - level) * k / ramp;
        level = target;
        for (int k = 0; k < hold && t < n_steps; ++k, ++t) sig(t, j) = level;
      }
    }
  }
  return sig;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Trajectory roll_one(const DynMap& plant, const GenerateConfig& cfg, int index) {
  std::mt19937_64 rng(splitmix64(cfg.seed ^ (0x51ed2700ULL + index)));
  const int n_steps = static_cast<int>(std::llround(cfg.duration / cfg.dt));
  Trajectory t;
  t.id = "traj_" + std::to_string(index);
  t.dt = cfg.dt;
  Eigen::VectorXd x = cfg.init_box.sample(rng);
  t.inputs = generate_signal(cfg.protocol, n_steps, rng);
  t.states.resize(n_steps + 1, x.size());
  t.states.row(0) = x.transpose();
  for (int k = 0; k < n_steps; ++k) {
    x = plant(x, t.inputs.row(k).transpose());
    t.states.row(k + 1) = x.transpose();
  }
  return t;
}

}  // namespace

TrajectoryDataset generate_dataset(const DynMap& plant, const GenerateConfig& cfg) {
  if (cfg.n_trajectories < 1)
    throw std::invalid_argument("generate_dataset: n_trajectories >= 1");
  if (!(cfg.dt > 0.0) || !(cfg.duration >= 2.0 * cfg.dt))
    throw std::invalid_argument("generate_dataset: need duration >= 2 dt > 0");

  TrajectoryDataset ds;
  ds.trajectories.resize(cfg.n_trajectories);

  const int threads = std::max(1, cfg.threads);
  if (threads == 1) {
    for (int i = 0; i < cfg.n_trajectories; ++i)
      ds.trajectories[i] = roll_one(plant, cfg, i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < cfg.n_trajectories;
             i = next.fetch_add(1))
          ds.trajectories[i] = roll_one(plant, cfg, i);
      });
    for (auto& th : pool) th.join();
  }

  nlohmann::json meta;
  meta["seed"] = cfg.seed;
  meta["protocol"] = cfg.protocol.kind == SignalProtocol::Kind::square_wave
                         ? "square_wave"
                         : "trapezoid";
  meta["duration"] = cfg.duration;
  meta["tag"] = cfg.tag;
  meta["init_lo"] = std::vector<double>(cfg.init_box.lo.begin(), cfg.init_box.lo.end());
  meta["init_hi"] = std::vector<double>(cfg.init_box.hi.begin(), cfg.init_box.hi.end());
  meta["amp_lo"] =
      std::vector<double>(cfg.protocol.amp_lo.begin(), cfg.protocol.amp_lo.end());
  meta["amp_hi"] =
      std::vector<double>(cfg.protocol.amp_hi.begin(), cfg.protocol.amp_hi.end());
  meta["hold"] = {cfg.protocol.hold_min, cfg.protocol.hold_max};
  meta["ramp"] = {cfg.protocol.ramp_min, cfg.protocol.ramp_max};
  ds.meta = meta.dump();
  return ds;
}

GenerateConfig two_tank_generate_defaults() {
  GenerateConfig cfg;
  cfg.n_trajectories = 1000;
  cfg.duration = 200.0;
  cfg.dt = 1.0;
  cfg.init_box = {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(0.5, 0.5)};
  cfg.protocol.kind = SignalProtocol::Kind::square_wave;
  cfg.protocol.amp_lo = Eigen::VectorXd::Zero(1);
  cfg.protocol.amp_hi = Eigen::VectorXd::Constant(1, 9.0);
  cfg.tag = "two_tank";
  return cfg;
}

GenerateConfig powertrain_generate_defaults() {
  GenerateConfig cfg;
  cfg.n_trajectories = 2583;
  cfg.duration = 100.0;
  cfg.dt = 0.1;
  cfg.init_box = {Eigen::Vector3d(0.0, 0.0, 0.4), Eigen::Vector3d(150.0, 30.0, 0.8)};
  cfg.protocol.kind = SignalProtocol::Kind::trapezoid;
  cfg.protocol.amp_lo = Eigen::Vector3d(0.0, -198.0, 0.0);
  cfg.protocol.amp_hi = Eigen::Vector3d(198.0, 196.0, 442.0);
  cfg.protocol.ramp_min = 5;
  cfg.protocol.ramp_max = 30;
  cfg.tag = "powertrain";
  return cfg;
}

}  // namespace sdyn
