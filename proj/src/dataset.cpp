#include "sdyn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sdyn {

double TrajectoryDataset::dt() const {
  if (trajectories.empty()) throw std::logic_error("dataset is empty");
  return trajectories.front().dt;
}

int TrajectoryDataset::n_x() const {
  if (trajectories.empty()) throw std::logic_error("dataset is empty");
  return static_cast<int>(trajectories.front().states.cols());
}

int TrajectoryDataset::n_u() const {
  if (trajectories.empty()) throw std::logic_error("dataset is empty");
  return static_cast<int>(trajectories.front().inputs.cols());
}

void TrajectoryDataset::validate() const {
  if (trajectories.empty()) throw std::invalid_argument("dataset is empty");
  const double dt0 = trajectories.front().dt;
  for (const auto& t : trajectories) {
    if (!(t.dt > 0.0)) throw std::invalid_argument("trajectory dt must be > 0");
    if (t.dt != dt0)
      throw std::invalid_argument("dataset trajectories must share one dt");
    if (t.states.rows() != t.inputs.rows() + 1)
      throw std::invalid_argument("trajectory " + t.id +
                                  ": states must have inputs+1 rows");
    if (t.states.cols() != trajectories.front().states.cols() ||
        t.inputs.cols() != trajectories.front().inputs.cols())
      throw std::invalid_argument("trajectory " + t.id + ": dimension mismatch");
  }
}

std::vector<Transition> transitions(const TrajectoryDataset& ds,
                                    std::span<const int> traj_ids) {
  std::vector<Transition> out;
  for (int id : traj_ids) {
    const Trajectory& t = ds.trajectories.at(id);
    for (int k = 0; k < t.n_steps(); ++k)
      out.push_back({t.states.row(k).transpose(), t.inputs.row(k).transpose(),
                     t.states.row(k + 1).transpose()});
  }
  return out;
}

std::vector<Transition> transitions(const TrajectoryDataset& ds) {
  std::vector<int> ids(ds.trajectories.size());
  std::iota(ids.begin(), ids.end(), 0);
  return transitions(ds, ids);
}

namespace {

double trajectory_sort_key(const Trajectory& t, int component) {
  if (component < 0) return t.states.minCoeff();
  return t.states.col(component).minCoeff();
}

}  // namespace

Split split(const TrajectoryDataset& ds, const SplitSpec& spec) {
  const int n = static_cast<int>(ds.trajectories.size());
  if (n < 2) throw std::invalid_argument("split: need at least 2 trajectories");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw std::invalid_argument("split: train_fraction must be in (0,1)");

  int n_train = static_cast<int>(std::lround(spec.train_fraction * n));
  n_train = std::clamp(n_train, 1, n - 1);

  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);

  Split s;
  if (spec.kind == SplitKind::interpolation) {
    std::mt19937_64 rng(spec.seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    s.train_ids.assign(ids.begin(), ids.begin() + n_train);
    s.test_ids.assign(ids.begin() + n_train, ids.end());
  } else {
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
      return trajectory_sort_key(ds.trajectories[a], spec.sort_component) <
             trajectory_sort_key(ds.trajectories[b], spec.sort_component);
    });
    const int n_test = n - n_train;
    s.test_ids.assign(ids.begin(), ids.begin() + n_test);
    s.train_ids.assign(ids.begin() + n_test, ids.end());
  }
  std::sort(s.train_ids.begin(), s.train_ids.end());
  std::sort(s.test_ids.begin(), s.test_ids.end());
  if (s.train_ids.empty() || s.test_ids.empty())
    throw std::invalid_argument("split: one side is empty");
  return s;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_dataset(const TrajectoryDataset& ds, const std::string& csv_path) {
  ds.validate();
  std::ofstream f(csv_path);
  if (!f) throw std::runtime_error("cannot open " + csv_path + " for writing");

  const int n_x = ds.n_x(), n_u = ds.n_u();
  f << "traj_id,t_index";
  for (int i = 1; i <= n_x; ++i) f << ",x_" << i;
  for (int i = 1; i <= n_u; ++i) f << ",u_" << i;
  f << "\n";
  for (const auto& t : ds.trajectories) {
    for (int k = 0; k < t.states.rows(); ++k) {
      f << t.id << "," << k;
      for (int i = 0; i < n_x; ++i) f << "," << fmt_double(t.states(k, i));
      for (int i = 0; i < n_u; ++i) {
        f << ",";
        if (k < t.inputs.rows()) f << fmt_double(t.inputs(k, i));
      }
      f << "\n";
    }
  }
  f.close();

  nlohmann::json meta = nlohmann::json::parse(ds.meta);
  meta["dt"] = ds.dt();
  meta["n_x"] = n_x;
  meta["n_u"] = n_u;
  meta["n_trajectories"] = ds.trajectories.size();
  std::ofstream mf(csv_path + ".meta.json");
  if (!mf) throw std::runtime_error("cannot open " + csv_path + ".meta.json");
  mf << meta.dump(2) << "\n";
}

TrajectoryDataset load_dataset(const std::string& csv_path) {
  std::ifstream mf(csv_path + ".meta.json");
  if (!mf) throw std::runtime_error("missing sidecar " + csv_path + ".meta.json");
  nlohmann::json meta = nlohmann::json::parse(mf);
  const double dt = meta.at("dt").get<double>();
  const int n_x = meta.at("n_x").get<int>();
  const int n_u = meta.at("n_u").get<int>();

  std::ifstream f(csv_path);
  if (!f) throw std::runtime_error("cannot open " + csv_path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty dataset file");

  struct Rows {
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::VectorXd> inputs;  // may be one shorter
  };
  std::vector<std::string> order;
  std::map<std::string, Rows> per_traj;

  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    while (static_cast<int>(cells.size()) < 2 + n_x + n_u) cells.emplace_back();
    const std::string& id = cells[0];
    auto it = per_traj.find(id);
    if (it == per_traj.end()) {
      order.push_back(id);
      it = per_traj.emplace(id, Rows{}).first;
    }
    Eigen::VectorXd x(n_x);
    for (int i = 0; i < n_x; ++i) x[i] = std::stod(cells[2 + i]);
    it->second.states.push_back(std::move(x));
    bool has_input = !cells[2 + n_x].empty();
    if (has_input) {
      Eigen::VectorXd u(n_u);
      for (int i = 0; i < n_u; ++i) u[i] = std::stod(cells[2 + n_x + i]);
      it->second.inputs.push_back(std::move(u));
    }
  }

  TrajectoryDataset ds;
  ds.meta = meta.dump();
  for (const auto& id : order) {
    const Rows& r = per_traj.at(id);
    Trajectory t;
    t.id = id;
    t.dt = dt;
    t.states.resize(static_cast<Eigen::Index>(r.states.size()), n_x);
    for (std::size_t k = 0; k < r.states.size(); ++k)
      t.states.row(static_cast<Eigen::Index>(k)) = r.states[k].transpose();
    t.inputs.resize(static_cast<Eigen::Index>(r.inputs.size()), n_u);
    for (std::size_t k = 0; k < r.inputs.size(); ++k)
      t.inputs.row(static_cast<Eigen::Index>(k)) = r.inputs[k].transpose();
    ds.trajectories.push_back(std::move(t));
  }
  ds.validate();
  return ds;
}

}  // namespace sdyn
