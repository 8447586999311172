#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>
#include <stdexcept>

#include "sdyn/plants.hpp"

using namespace sdyn;

TEST_SUITE("plants") {

TEST_CASE("two-tank equilibrium holds to integrator tolerance") {
  TwoTankParams p;
  const double h1 = 0.16;
  const double v_eq = p.k1 * std::sqrt(h1) / p.k4;  // balances dh1 = 0
  Eigen::Vector2d h(h1, 0.05);
  Eigen::Vector2d next = two_tank_step(p, h, v_eq, 1.0);
  CHECK(std::abs(next[0] - h1) <= 1e-9);
}

TEST_CASE("two-tank origin is a fixed point under zero input") {
  Eigen::Vector2d next = two_tank_step(TwoTankParams{}, Eigen::Vector2d::Zero(), 0.0, 1.0);
  CHECK(next.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two-tank discrete map matches its sign sets under sampling") {
  DynMap f = two_tank_map(TwoTankParams{}, 1.0);
  Box sb{Eigen::Vector2d(0.01, 0.01), Eigen::Vector2d(0.5, 0.5)};
  Box ib{Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 9.0)};
  SampledCheckOptions opts;
  opts.n_samples = 10000;
  opts.seed = 1;
  // the 1 s sampled map carries O(dt^2) cross-couplings (~6e-5) through the
  // tank cascade, so the sign tolerance sits above them
  opts.tol = 1e-4;
  ConstraintReport rep = check_sampled(f, two_tank_pattern(), sb, ib, opts);
  CHECK(rep.passed);
}

TEST_CASE("halving the substep leaves two-tank trajectories unchanged to 1e-6") {
  TwoTankParams p;
  std::mt19937_64 rng(5);
  Box sb{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(0.5, 0.5)};
  std::uniform_real_distribution<double> vd(0.0, 9.0);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::Vector2d h = sb.sample(rng);
    const double v = vd(rng);
    Eigen::Vector2d coarse = h, fine = h;
    for (int t = 0; t < 50; ++t) {
      coarse = two_tank_step(p, coarse, v, 1.0, 10);
      fine = two_tank_step(p, fine, v, 1.0, 20);
    }
    const double scale = std::max(1e-30, fine.cwiseAbs().maxCoeff());
    CHECK((coarse - fine).cwiseAbs().maxCoeff() / scale <= 1e-6);
  }
}

TEST_CASE("powertrain origin is a fixed point") {
  Eigen::Vector3d next = powertrain_step(PowertrainParams{}, Eigen::Vector3d::Zero(),
                                         Eigen::Vector3d::Zero(), 0.1);
  CHECK(next.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("powertrain step map matches the input sign sets when moving") {
  DynMap f = powertrain_map(PowertrainParams{}, 0.1);
  Box sb{Eigen::Vector3d(0.0, 0.5, 0.1), Eigen::Vector3d(198.0, 40.0, 0.9)};
  Box ib{Eigen::Vector3d(0.0, -198.0, 0.0), Eigen::Vector3d(198.0, 196.0, 442.0)};
  SampledCheckOptions opts;
  opts.n_samples = 10000;
  opts.seed = 2;
  // discretization couplings between input channels are O(dt^2) ~ 5e-8
  opts.tol = 1e-6;
  ConstraintReport rep = check_sampled(f, powertrain_pattern(), sb, ib, opts);
  CHECK(rep.passed);
}

TEST_CASE("positive motor torque at positive speed strictly discharges") {
  PowertrainParams p;
  Eigen::Vector3d x(50.0, 12.0, 0.6);
  Eigen::Vector3d u(40.0, 80.0, 0.0);
  Eigen::Vector3d next = powertrain_step(p, x, u, 0.1);
  CHECK(next[2] < x[2]);
}

TEST_CASE("square-wave signals hold levels inside the amplitude range") {
  SignalProtocol proto;
  proto.kind = SignalProtocol::Kind::square_wave;
  proto.amp_lo = Eigen::VectorXd::Constant(1, 0.0);
  proto.amp_hi = Eigen::VectorXd::Constant(1, 9.0);
  std::mt19937_64 rng(7);
  Eigen::MatrixXd sig = generate_signal(proto, 200, rng);
  CHECK(sig.rows() == 200);
  CHECK(sig.minCoeff() >= 0.0);
  CHECK(sig.maxCoeff() <= 9.0);
  // piecewise constant with at least one level change
  int changes = 0;
  for (int t = 1; t < 200; ++t)
    if (sig(t, 0) != sig(t - 1, 0)) ++changes;
  CHECK(changes >= 2);
  CHECK(changes <= 20);
}

TEST_CASE("trapezoid signals ramp between holds within range") {
  SignalProtocol proto;
  proto.kind = SignalProtocol::Kind::trapezoid;
  proto.amp_lo = Eigen::Vector3d(0.0, -198.0, 0.0);
  proto.amp_hi = Eigen::Vector3d(198.0, 196.0, 442.0);
  std::mt19937_64 rng(11);
  Eigen::MatrixXd sig = generate_signal(proto, 300, rng);
  for (int j = 0; j < 3; ++j) {
    CHECK(sig.col(j).minCoeff() >= proto.amp_lo[j] - 1e-12);
    CHECK(sig.col(j).maxCoeff() <= proto.amp_hi[j] + 1e-12);
  }
}

TEST_CASE("dataset generation shapes and determinism") {
  GenerateConfig cfg = two_tank_generate_defaults();
  cfg.n_trajectories = 3;
  cfg.duration = 10.0;
  cfg.seed = 17;
  DynMap plant = two_tank_map(TwoTankParams{}, cfg.dt);
  TrajectoryDataset ds = generate_dataset(plant, cfg);
  CHECK(ds.trajectories.size() == 3);
  CHECK(ds.trajectories[0].states.rows() == 11);
  CHECK(ds.trajectories[0].inputs.rows() == 10);

  // minimal two-sample trajectory
  GenerateConfig tiny = cfg;
  tiny.n_trajectories = 1;
  tiny.duration = 2.0 * tiny.dt;
  TrajectoryDataset small = generate_dataset(plant, tiny);
  CHECK(small.trajectories[0].states.rows() == 3);
  CHECK(small.trajectories[0].inputs.rows() == 2);

  TrajectoryDataset again = generate_dataset(plant, cfg);
  for (int k = 0; k < 3; ++k) {
    CHECK((ds.trajectories[k].states - again.trajectories[k].states)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  // threaded generation is byte-identical (per-trajectory seeds)
  GenerateConfig par = cfg;
  par.threads = 4;
  TrajectoryDataset parallel = generate_dataset(plant, par);
  for (int k = 0; k < 3; ++k)
    CHECK((ds.trajectories[k].states - parallel.trajectories[k].states)
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("experiment defaults match the documented protocols") {
  GenerateConfig tt = two_tank_generate_defaults();
  CHECK(tt.n_trajectories == 1000);
  CHECK(tt.duration == 200.0);
  CHECK(tt.dt == 1.0);
  CHECK(tt.init_box.hi[0] == 0.5);
  CHECK(tt.protocol.amp_hi[0] == 9.0);

  GenerateConfig pt = powertrain_generate_defaults();
  CHECK(pt.n_trajectories == 2583);
  CHECK(pt.duration == 100.0);
  CHECK(pt.dt == doctest::Approx(0.1));
  CHECK(pt.protocol.amp_lo[1] == -198.0);
  CHECK(pt.protocol.amp_hi[0] == 198.0);
  CHECK(pt.protocol.amp_hi[2] == 442.0);
}

}  // TEST_SUITE
