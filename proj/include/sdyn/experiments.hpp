#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "sdyn/dataset.hpp"
#include "sdyn/model.hpp"
#include "sdyn/mpc.hpp"
#include "sdyn/plants.hpp"
#include "sdyn/training.hpp"

namespace sdyn {

enum class PlantKind { two_tank, powertrain };
enum class ModelFamily { el_signed, el_free, linear_signed, linear_free, nn_baseline };

const char* to_string(PlantKind p);
const char* to_string(ModelFamily f);
PlantKind plant_from_string(const std::string& s);
ModelFamily family_from_string(const std::string& s);

/// Architectures used by the experiments: two-tank EL models have two sinh
/// layers each for Phi and a constant Psi (26 parameters); powertrain EL
/// models have three layers with hypernet-conditioned Psi (372 parameters);
/// linear families are EL models with zero transform layers; the NN baselines
/// are 26- and 393-parameter fully connected nets.
std::unique_ptr<Model> make_model(ModelFamily family, PlantKind plant,
                                  std::uint64_t seed);

SignPattern plant_pattern(PlantKind plant);
DynMap plant_map(PlantKind plant);

TrainConfig default_train_config(PlantKind plant);

/// Sorted-breakpoint linear interpolation with flat extrapolation.
class LookupTable {
 public:
  LookupTable() = default;
  LookupTable(Eigen::VectorXd x, Eigen::VectorXd y);
  double operator()(double v) const;

 private:
  Eigen::VectorXd x_, y_;
};

struct TableResult {
  std::vector<ModelFamily> families;
  Eigen::MatrixXd r2;  // families x 2 (interpolation, extrapolation)
  std::vector<TrainResult> interp_results;
  std::vector<TrainResult> extrap_results;
};

/// Trains every family on both splits of the dataset and reports R^2 of
/// one-step changes on the respective test sets.
TableResult run_table(const TrajectoryDataset& ds, PlantKind plant,
                      const TrainConfig& cfg, std::uint64_t split_seed,
                      const std::vector<ModelFamily>& families);

std::vector<ModelFamily> all_families();

/// Extrapolation sort key used by each experiment (two-tank: minimum level
/// over both tanks; powertrain: minimum driveshaft torque).
int extrapolation_sort_component(PlantKind plant);

/// Tracking spec for the two-tank loop: step reference on the tank-2 level,
/// nonnegative pump voltage bounded by `u_max`.
MpcSpec two_tank_mpc_spec(double ref_initial, double ref_final, int step_at,
                          int horizon = 10, double u_max = 9.0);

struct PowertrainMpcConfig {
  Eigen::VectorXd v_req_profile;  // requested speed per step
  int horizon = 10;
  double w_speed = 10.0;
  double w_eng = 1e-5;
  double w_mot = 1e-5;
  double w_brk = 1e-4;
  double w_soc = 200.0;
  double soc_ref = 0.6;
  double soc_lo = 0.3;
  double soc_hi = 0.9;
  double tau_mot_lo = -198.0;
  double tau_mot_hi = 196.0;
  double tau_brk_hi = 442.0;
  double p_mot_lo = -4000.0;
  double p_mot_hi = 4000.0;
  // placeholder tables; replace with calibrated data when available
  LookupTable engine_torque_bound;  // tau_ds upper bound vs V
  LookupTable soc_regen;            // regenerable SoC vs V

  PowertrainMpcConfig();
};

/// Speed tracking with SoC box, SoC regeneration soft target evaluated at
/// V_req, speed-dependent engine-torque bound, and motor power limits; the
/// speed-dependent rows substitute V_req for V.
MpcSpec powertrain_mpc_spec(const PowertrainMpcConfig& cfg);

}  // namespace sdyn
