#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "sdyn/dataset.hpp"
#include "sdyn/model.hpp"

namespace sdyn {

struct TrainConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int batch_size = 256;
  int max_epochs = 500;
  int patience = 15;          // early-stop after this many non-improving epochs
  double val_fraction = 0.15; // share of the training trajectories held out
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

enum class TrainStatus { early_stopped, max_epochs, diverged };

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val = 0.0;
  TrainStatus status = TrainStatus::max_epochs;
};

/// Mean squared one-step prediction error over the batch.
double loss(const Model& m, std::span<const Transition> batch);

/// Exact reverse-mode gradient of loss() w.r.t. every raw parameter.
Eigen::VectorXd gradients(const Model& m, std::span<const Transition> batch);

/// Tracks the best validation loss; fires after `patience` consecutive
/// non-improving epochs.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}
  /// Returns true when training should stop.
  bool update(double val_loss);
  int best_epoch() const { return best_epoch_; }
  double best_val() const { return best_val_; }

 private:
  int patience_;
  int epoch_ = -1;
  int best_epoch_ = -1;
  double best_val_ = std::numeric_limits<double>::infinity();
  int since_improvement_ = 0;
};

using EpochCallback = std::function<void(int epoch, const Model& m)>;

/// Adam over minibatches of transitions with per-epoch validation on a
/// held-out trajectory fraction; restores the best validation parameters.
TrainResult train(Model& m, const TrajectoryDataset& ds,
                  std::span<const int> train_traj_ids, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// R^2 of one-step state changes: targets dx = x(t+1) - x(t), each component
/// standardized by the test-set standard deviation of its dx, pooled over
/// components and samples.
double r_squared(const std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                                     const Eigen::VectorXd&)>& predictor,
                 std::span<const Transition> test);
double r_squared(const Model& m, std::span<const Transition> test);

}  // namespace sdyn
