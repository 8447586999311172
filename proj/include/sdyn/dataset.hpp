#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sdyn {

/// One rollout: T+1 state samples and the T inputs applied between them.
struct Trajectory {
  std::string id;
  double dt = 1.0;
  Eigen::MatrixXd states;  // (T+1) x n_x
  Eigen::MatrixXd inputs;  // T x n_u

  int n_steps() const { return static_cast<int>(inputs.rows()); }
};

struct TrajectoryDataset {
  std::vector<Trajectory> trajectories;
  // Generation metadata (seed, protocol, plant parameters) as a JSON string.
  std::string meta = "{}";

  double dt() const;
  int n_x() const;
  int n_u() const;
  void validate() const;
};

struct Transition {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  Eigen::VectorXd x_next;
};

std::vector<Transition> transitions(const TrajectoryDataset& ds,
                                    std::span<const int> traj_ids);
std::vector<Transition> transitions(const TrajectoryDataset& ds);

enum class SplitKind { interpolation, extrapolation };

struct SplitSpec {
  SplitKind kind = SplitKind::interpolation;
  double train_fraction = 0.85;
  /// Extrapolation sort key: minimum over time of this state component
  /// (-1 = minimum over all components).
  int sort_component = -1;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<int> train_ids;
  std::vector<int> test_ids;
};

/// Interpolation: seeded uniform shuffle then fraction cut. Extrapolation:
/// sort ascending by the key; the lowest (1 - train_fraction) share is the
/// test set, the largest share trains.
Split split(const TrajectoryDataset& ds, const SplitSpec& spec);

/// CSV with header traj_id,t_index,x_1..x_nx,u_1..u_nu; one row per sample
/// time, input cells empty on each trajectory's final row. dt and generation
/// metadata live in a sidecar <path>.meta.json.
void save_dataset(const TrajectoryDataset& ds, const std::string& csv_path);
TrajectoryDataset load_dataset(const std::string& csv_path);

}  // namespace sdyn
