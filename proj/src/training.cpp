#include "sdyn/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sdyn {

namespace {

/// Per-transition loss graph: inputs [x, u, x_next], root = squared error.
struct LossTape {
  ad::Tape tape;
  ad::Expr root;
  int n_x = 0, n_u = 0;

  explicit LossTape(const Model& m) : n_x(m.state_dim()), n_u(m.input_dim()) {
    std::vector<ad::Expr> x, u, x_next;
    for (int i = 0; i < n_x; ++i) x.push_back(tape.input(i));
    for (int i = 0; i < n_u; ++i) u.push_back(tape.input(n_x + i));
    for (int i = 0; i < n_x; ++i) x_next.push_back(tape.input(n_x + n_u + i));
    std::vector<ad::Expr> pred = m.emit_predict(tape, x, u);
    ad::Expr acc = ad::sqr(x_next[0] - pred[0]);
    for (int i = 1; i < n_x; ++i) acc = acc + ad::sqr(x_next[i] - pred[i]);
    root = acc;
    if (tape.n_params() != m.param_count())
      throw std::logic_error("emit_predict consumed a different parameter count");
  }

  void fill_inputs(const Transition& t, std::vector<double>& in) const {
    in.resize(n_x + n_u + n_x);
    for (int i = 0; i < n_x; ++i) in[i] = t.x[i];
    for (int i = 0; i < n_u; ++i) in[n_x + i] = t.u[i];
    for (int i = 0; i < n_x; ++i) in[n_x + n_u + i] = t.x_next[i];
  }
};

}  // namespace

double loss(const Model& m, std::span<const Transition> batch) {
  if (batch.empty()) throw std::invalid_argument("loss: batch must be nonempty");
  LossTape lt(m);
  Eigen::VectorXd theta = m.params();
  std::span<const double> params(theta.data(), static_cast<std::size_t>(theta.size()));
  std::vector<double> in, values;
  double acc = 0.0;
  for (const Transition& t : batch) {
    lt.fill_inputs(t, in);
    lt.tape.forward(params, in, values);
    acc += values[lt.root.id];
  }
  return acc / static_cast<double>(batch.size());
}

Eigen::VectorXd gradients(const Model& m, std::span<const Transition> batch) {
  if (batch.empty()) throw std::invalid_argument("gradients: batch must be nonempty");
  LossTape lt(m);
  Eigen::VectorXd theta = m.params();
  std::span<const double> params(theta.data(), static_cast<std::size_t>(theta.size()));
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
  std::span<double> gspan(grad.data(), static_cast<std::size_t>(grad.size()));
  std::vector<double> in, values, adjoint;
  for (const Transition& t : batch) {
    lt.fill_inputs(t, in);
    lt.tape.forward(params, in, values);
    lt.tape.backward(lt.root, values, adjoint, gspan, {});
  }
  return grad / static_cast<double>(batch.size());
}

bool EarlyStopper::update(double val_loss) {
  ++epoch_;
  if (val_loss < best_val_) {
    best_val_ = val_loss;
    best_epoch_ = epoch_;
    since_improvement_ = 0;
    return false;
  }
  ++since_improvement_;
  return since_improvement_ >= patience_;
}

TrainResult train(Model& m, const TrajectoryDataset& ds,
                  std::span<const int> train_traj_ids, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  if (train_traj_ids.empty())
    throw std::invalid_argument("train: training set must be nonempty");
  if (cfg.patience < 1) throw std::invalid_argument("train: patience must be >= 1");
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0))
    throw std::invalid_argument("train: val_fraction must be in (0,1)");

  std::mt19937_64 rng(cfg.seed);

  // hold out a validation share of the training trajectories
  std::vector<int> ids(train_traj_ids.begin(), train_traj_ids.end());
  std::shuffle(ids.begin(), ids.end(), rng);
  int n_val = static_cast<int>(std::lround(cfg.val_fraction * ids.size()));
  n_val = std::clamp(n_val, 1, static_cast<int>(ids.size()) - 1);
  std::vector<int> val_ids(ids.begin(), ids.begin() + n_val);
  std::vector<int> fit_ids(ids.begin() + n_val, ids.end());

  std::vector<Transition> fit = transitions(ds, fit_ids);
  std::vector<Transition> val = transitions(ds, val_ids);

  LossTape lt(m);
  Eigen::VectorXd theta = m.params();
  const int n = static_cast<int>(theta.size());
  Eigen::VectorXd mom = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd vel = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad(n);
  Eigen::VectorXd best_theta = theta;
  constexpr double kAdamEps = 1e-8;

  std::vector<double> in, values, adjoint;
  // transform overflow inside an evaluation counts as divergence
  auto eval_mean_loss = [&](std::span<const Transition> set) {
    std::span<const double> params(theta.data(), static_cast<std::size_t>(n));
    double acc = 0.0;
    try {
      for (const Transition& t : set) {
        lt.fill_inputs(t, in);
        lt.tape.forward(params, in, values);
        acc += values[lt.root.id];
      }
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    return acc / static_cast<double>(set.size());
  };

  TrainResult res;
  EarlyStopper stopper(cfg.patience);
  std::vector<int> order(fit.size());
  std::iota(order.begin(), order.end(), 0);
  long long adam_step = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    bool bad = false;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double bn = static_cast<double>(end - start);
      grad.setZero();
      double batch_loss = 0.0;
      std::span<const double> params(theta.data(), static_cast<std::size_t>(n));
      std::span<double> gspan(grad.data(), static_cast<std::size_t>(n));
      try {
        for (std::size_t k = start; k < end; ++k) {
          lt.fill_inputs(fit[order[k]], in);
          lt.tape.forward(params, in, values);
          batch_loss += values[lt.root.id];
          lt.tape.backward(lt.root, values, adjoint, gspan, {});
        }
      } catch (const std::domain_error&) {
        batch_loss = std::numeric_limits<double>::quiet_NaN();
      }
      batch_loss /= bn;
      if (!std::isfinite(batch_loss)) {
        bad = true;
        break;
      }
      grad /= bn;
      epoch_loss += batch_loss * bn;
      seen += end - start;

      ++adam_step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam_step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam_step));
      for (int i = 0; i < n; ++i) {
        mom[i] = cfg.beta1 * mom[i] + (1.0 - cfg.beta1) * grad[i];
        vel[i] = cfg.beta2 * vel[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        theta[i] -= cfg.step_size * (mom[i] / bc1) /
                    (std::sqrt(vel[i] / bc2) + kAdamEps);
      }
    }

    if (bad) {
      res.status = TrainStatus::diverged;
      break;
    }

    const double train_loss = epoch_loss / static_cast<double>(seen);
    const double val_loss = eval_mean_loss(val);
    res.history.push_back({epoch, train_loss, val_loss});
    if (!std::isfinite(val_loss)) {
      res.status = TrainStatus::diverged;
      break;
    }

    const bool was_best = val_loss < stopper.best_val();
    const bool stop = stopper.update(val_loss);
    if (was_best) best_theta = theta;

    if (on_epoch) {
      m.set_params(theta);
      on_epoch(epoch, m);
    }
    if (stop) {
      res.status = TrainStatus::early_stopped;
      break;
    }
  }

  res.best_epoch = stopper.best_epoch();
  res.best_val = stopper.best_val();
  if (res.best_epoch < 0) best_theta = theta;  // no finite epoch completed
  m.set_params(best_theta);
  return res;
}

double r_squared(const std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                                     const Eigen::VectorXd&)>& predictor,
                 std::span<const Transition> test) {
  if (test.size() < 2)
    throw std::invalid_argument("r_squared: need at least 2 transitions");
  const int n_x = static_cast<int>(test.front().x.size());
  const int n = static_cast<int>(test.size());

  Eigen::MatrixXd d_true(n, n_x), d_pred(n, n_x);
  for (int k = 0; k < n; ++k) {
    d_true.row(k) = (test[k].x_next - test[k].x).transpose();
    d_pred.row(k) = (predictor(test[k].x, test[k].u) - test[k].x).transpose();
  }

  const Eigen::RowVectorXd mean = d_true.colwise().mean();
  Eigen::RowVectorXd stddev(n_x);
  for (int j = 0; j < n_x; ++j) {
    const double var =
        (d_true.col(j).array() - mean[j]).square().sum() / static_cast<double>(n);
    stddev[j] = std::sqrt(var);
  }

  double ss_res = 0.0, ss_tot = 0.0;
  int used = 0;
  for (int j = 0; j < n_x; ++j) {
    if (stddev[j] <= 0.0) continue;  // constant component carries no signal
    ++used;
    const double s2 = stddev[j] * stddev[j];
    ss_res += (d_pred.col(j) - d_true.col(j)).squaredNorm() / s2;
    ss_tot += (d_true.col(j).array() - mean[j]).square().sum() / s2;
  }
  if (used == 0)
    throw std::domain_error("r_squared: every component has zero variance");
  return 1.0 - ss_res / ss_tot;
}

double r_squared(const Model& m, std::span<const Transition> test) {
  return r_squared(
      [&m](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        return m.predict(x, u);
      },
      test);
}

}  // namespace sdyn
