#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>

#include "sdyn/dataset.hpp"
#include "sdyn/sign.hpp"

namespace sdyn {

// ---------------------------------------------------------------------------
// Two-tank system: dh1 = -k1 sqrt(h1) + k4 Vp, dh2 = k2 sqrt(h1) - k3 sqrt(h2)

struct TwoTankParams {
  double k1 = 0.020;
  double k2 = 0.009;
  double k3 = 0.015;
  double k4 = 0.0025;
};

Eigen::Vector2d two_tank_rhs(const TwoTankParams& p, const Eigen::Vector2d& h,
                             double v_p);

/// Classical RK4 with dt/substeps per stage; levels are clamped to >= 0 after
/// each substep and sqrt is evaluated on the clamped value.
Eigen::Vector2d two_tank_step(const TwoTankParams& p, const Eigen::Vector2d& h,
                              double v_p, double dt, int substeps = 10);

DynMap two_tank_map(const TwoTankParams& p, double dt, int substeps = 10);

/// Discrete-time sign sets of the two-tank system.
SignPattern two_tank_pattern();

// ---------------------------------------------------------------------------
// Surrogate hybrid powertrain. State x = [tau_eng_ds, V, S] (driveshaft
// engine torque, vehicle speed, state of charge), input
// u = [tau_eng_cmd, tau_mot, tau_brk]. First-principles stand-in with the
// same input sign structure as the real plant: braking and rolling
// resistance vanish smoothly at standstill so they cannot reverse motion,
// and motor torque discharges the battery in proportion to power at the
// wheels (with a regeneration efficiency when charging).

struct PowertrainParams {
  double engine_lag = 0.5;   // s
  double engine_gain = 1.0;
  double inertia = 1500.0;   // effective mass-equivalent
  double ratio = 0.3;        // driveline ratio, m-equivalent
  double c0 = 30.0;          // rolling resistance
  double c1 = 5.0;           // linear drag
  double c2 = 0.4;           // quadratic drag
  double soc_coeff = 2e-5;   // discharge per unit motor power
  double regen_eff = 0.6;
};

Eigen::Vector3d powertrain_rhs(const PowertrainParams& p, const Eigen::Vector3d& x,
                               const Eigen::Vector3d& u);

/// RK4 step; S clamped to [0,1] and V to >= 0 after each substep.
Eigen::Vector3d powertrain_step(const PowertrainParams& p, const Eigen::Vector3d& x,
                                const Eigen::Vector3d& u, double dt,
                                int substeps = 5);

DynMap powertrain_map(const PowertrainParams& p, double dt, int substeps = 5);

/// Input sign sets of the powertrain (state sets unconstrained).
SignPattern powertrain_pattern();

// ---------------------------------------------------------------------------
// Input-signal protocols and dataset generation

struct SignalProtocol {
  enum class Kind { square_wave, trapezoid };
  Kind kind = Kind::square_wave;
  Eigen::VectorXd amp_lo;  // per input component
  Eigen::VectorXd amp_hi;
  int hold_min = 10;  // square wave: half-period range, in samples
  int hold_max = 50;
  int ramp_min = 5;  // trapezoid: ramp/hold duration range, in samples
  int ramp_max = 30;

  int n_u() const { return static_cast<int>(amp_lo.size()); }
};

/// T x n_u input signal.
Eigen::MatrixXd generate_signal(const SignalProtocol& protocol, int n_steps,
                                std::mt19937_64& rng);

struct GenerateConfig {
  int n_trajectories = 0;
  double duration = 0.0;  // seconds
  double dt = 1.0;
  Box init_box;  // initial-state distribution (uniform)
  SignalProtocol protocol;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string tag;
};

/// Rolls out `plant` per trajectory with per-trajectory seeds derived from the
/// master seed, so results are byte-identical regardless of thread count.
TrajectoryDataset generate_dataset(const DynMap& plant, const GenerateConfig& cfg);

/// Protocol/box defaults used by the experiments.
GenerateConfig two_tank_generate_defaults();
GenerateConfig powertrain_generate_defaults();

}  // namespace sdyn
