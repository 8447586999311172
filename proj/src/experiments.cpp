#include "sdyn/experiments.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sdyn {

const char* to_string(PlantKind p) {
  return p == PlantKind::two_tank ? "two_tank" : "powertrain";
}

const char* to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::el_signed: return "el_signed";
    case ModelFamily::el_free: return "el_free";
    case ModelFamily::linear_signed: return "linear_signed";
    case ModelFamily::linear_free: return "linear_free";
    default: return "nn_baseline";
  }
}

PlantKind plant_from_string(const std::string& s) {
  if (s == "two_tank") return PlantKind::two_tank;
  if (s == "powertrain") return PlantKind::powertrain;
  throw std::invalid_argument("unknown plant: " + s);
}

ModelFamily family_from_string(const std::string& s) {
  for (ModelFamily f : all_families())
    if (s == to_string(f)) return f;
  throw std::invalid_argument("unknown model family: " + s);
}

std::vector<ModelFamily> all_families() {
  return {ModelFamily::el_signed, ModelFamily::el_free, ModelFamily::linear_signed,
          ModelFamily::linear_free, ModelFamily::nn_baseline};
}

SignPattern plant_pattern(PlantKind plant) {
  return plant == PlantKind::two_tank ? two_tank_pattern() : powertrain_pattern();
}

DynMap plant_map(PlantKind plant) {
  if (plant == PlantKind::two_tank) return two_tank_map(TwoTankParams{}, 1.0);
  return powertrain_map(PowertrainParams{}, 0.1);
}

int extrapolation_sort_component(PlantKind plant) {
  return plant == PlantKind::two_tank ? -1 : 0;
}

namespace {

SignedLinearCore random_core(const SignPattern& pattern, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> small(-0.1, 0.1);
  const int n_x = pattern.n_x, n_u = pattern.n_u;
  Eigen::MatrixXd a(n_x, n_x), b(n_x, n_u);
  Eigen::VectorXd c(n_x);
  auto draw = [&](const SignSet& s) {
    double v = small(rng);
    // strict singletons need a positive raw so relu keeps a margin above eps
    if (s.singleton() && s.the_sign() != 0) v = 0.05 + std::abs(v);
    return v;
  };
  for (int i = 0; i < n_x; ++i) {
    for (int j = 0; j < n_x; ++j) a(i, j) = draw(pattern.state(i, j));
    for (int j = 0; j < n_u; ++j) b(i, j) = draw(pattern.input(i, j));
    c[i] = draw(pattern.s_zero[i]);
  }
  return SignedLinearCore(std::move(a), std::move(b), std::move(c), pattern);
}

}  // namespace

std::unique_ptr<Model> make_model(ModelFamily family, PlantKind plant,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const bool two_tank = plant == PlantKind::two_tank;
  const int n_x = two_tank ? 2 : 3;
  const int n_u = two_tank ? 1 : 3;

  if (family == ModelFamily::nn_baseline) {
    if (two_tank)
      return std::make_unique<MlpModel>(2, 1, std::vector<int>{2, 2, 2},
                                        MlpModel::Activation::tanh, seed);
    return std::make_unique<MlpModel>(3, 3, std::vector<int>{15, 15},
                                      MlpModel::Activation::relu, seed);
  }

  const bool signed_family =
      family == ModelFamily::el_signed || family == ModelFamily::linear_signed;
  const bool linear_family =
      family == ModelFamily::linear_signed || family == ModelFamily::linear_free;
  SignPattern pattern =
      signed_family ? plant_pattern(plant) : SignPattern::unconstrained(n_x, n_u);

  SignedLinearCore core = random_core(pattern, rng);
  if (linear_family)
    return std::make_unique<ELModel>(MonotoneTransform(n_x),
                                     InputTransform(MonotoneTransform(n_u)),
                                     std::move(core));

  const int n_layers = two_tank ? 2 : 3;
  MonotoneTransform phi = MonotoneTransform::identity_init(n_x, n_layers);
  InputTransform psi =
      two_tank
          ? InputTransform(MonotoneTransform::identity_init(n_u, n_layers))
          : InputTransform(ConditionedTransform::identity_init(n_u, n_x, n_layers,
                                                               3, rng));
  return std::make_unique<ELModel>(std::move(phi), std::move(psi), std::move(core));
}

TrainConfig default_train_config(PlantKind plant) {
  TrainConfig cfg;
  cfg.patience = plant == PlantKind::two_tank ? 15 : 10;
  cfg.max_epochs = plant == PlantKind::two_tank ? 400 : 150;
  return cfg;
}

TableResult run_table(const TrajectoryDataset& ds, PlantKind plant,
                      const TrainConfig& cfg, std::uint64_t split_seed,
                      const std::vector<ModelFamily>& families) {
  TableResult out;
  out.families = families;
  out.r2.resize(static_cast<Eigen::Index>(families.size()), 2);

  SplitSpec interp{SplitKind::interpolation, 0.85, -1, split_seed};
  SplitSpec extrap{SplitKind::extrapolation, 0.85,
                   extrapolation_sort_component(plant), split_seed};

  for (int col = 0; col < 2; ++col) {
    const Split sp = split(ds, col == 0 ? interp : extrap);
    const std::vector<Transition> test = transitions(ds, sp.test_ids);
    for (std::size_t f = 0; f < families.size(); ++f) {
      auto model = make_model(families[f], plant, cfg.seed + 17 * f + col);
      TrainConfig fam_cfg = cfg;
      fam_cfg.seed = cfg.seed + 1000 * (f + 1) + col;
      TrainResult tr = train(*model, ds, sp.train_ids, fam_cfg);
      out.r2(static_cast<Eigen::Index>(f), col) = r_squared(*model, test);
      (col == 0 ? out.interp_results : out.extrap_results).push_back(std::move(tr));
    }
  }
  return out;
}

LookupTable::LookupTable(Eigen::VectorXd x, Eigen::VectorXd y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size() || x_.size() < 1)
    throw std::invalid_argument("LookupTable: need matching nonempty breakpoints");
  for (int i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1]))
      throw std::invalid_argument("LookupTable: breakpoints must increase");
}

double LookupTable::operator()(double v) const {
  if (x_.size() == 0) throw std::logic_error("LookupTable: empty");
  if (v <= x_[0]) return y_[0];
  const int n = static_cast<int>(x_.size());
  if (v >= x_[n - 1]) return y_[n - 1];
  int i = 1;
  while (x_[i] < v) ++i;
  const double t = (v - x_[i - 1]) / (x_[i] - x_[i - 1]);
  return y_[i - 1] + t * (y_[i] - y_[i - 1]);
}

MpcSpec two_tank_mpc_spec(double ref_initial, double ref_final, int step_at,
                          int horizon, double u_max) {
  MpcSpec spec;
  spec.horizon = horizon;
  spec.weights.req = Eigen::Vector2d(0.0, 50.0);
  spec.weights.u = Eigen::VectorXd::Constant(1, 1e-3);
  spec.weights.soft = Eigen::Vector2d(0.0, 0.0);
  spec.state_nonneg = {true, true};
  spec.input_nonneg = {true};
  Eigen::MatrixXd ref(step_at + 1, 2);
  for (int t = 0; t < step_at; ++t) ref.row(t) = Eigen::RowVector2d(0.0, ref_initial);
  ref.row(step_at) = Eigen::RowVector2d(0.0, ref_final);
  spec.x_req = Timeline::schedule(ref);
  spec.u_hi = Timeline::constant(Eigen::VectorXd::Constant(1, u_max));
  return spec;
}

PowertrainMpcConfig::PowertrainMpcConfig() {
  Eigen::VectorXd vb(5), tb(5);
  vb << 0.0, 10.0, 20.0, 30.0, 40.0;
  tb << 190.0, 180.0, 160.0, 135.0, 110.0;
  engine_torque_bound = LookupTable(vb, tb);
  Eigen::VectorXd vr(6), sr(6);
  vr << 0.0, 5.0, 10.0, 20.0, 30.0, 40.0;
  sr << 0.0, 0.004, 0.015, 0.05, 0.1, 0.16;
  soc_regen = LookupTable(vr, sr);
}

MpcSpec powertrain_mpc_spec(const PowertrainMpcConfig& cfg) {
  MpcSpec spec;
  spec.horizon = cfg.horizon;
  spec.weights.req = Eigen::Vector3d(0.0, cfg.w_speed, 0.0);
  spec.weights.u = Eigen::Vector3d(cfg.w_eng, cfg.w_mot, cfg.w_brk);
  spec.weights.soft = Eigen::Vector3d(0.0, 0.0, cfg.w_soc);
  spec.state_nonneg = {false, false, false};
  spec.input_nonneg = {true, false, true};

  const int T = static_cast<int>(cfg.v_req_profile.size());
  Eigen::MatrixXd x_req(T, 3), x_hi(T, 3), x_lo(T, 3), soft_lo(T, 3);
  Eigen::MatrixXd u_lo(T, 3), u_hi(T, 3);
  for (int t = 0; t < T; ++t) {
    const double v_req = cfg.v_req_profile[t];
    x_req.row(t) = Eigen::RowVector3d(0.0, v_req, 0.0);
    x_hi.row(t) =
        Eigen::RowVector3d(cfg.engine_torque_bound(v_req), kInf, cfg.soc_hi);
    x_lo.row(t) = Eigen::RowVector3d(-kInf, -kInf, cfg.soc_lo);
    soft_lo.row(t) = Eigen::RowVector3d(
        -kInf, -kInf, cfg.soc_ref - cfg.soc_regen(v_req));
    // motor power limits evaluated at the requested speed
    const double v_den = std::max(v_req, 0.1);
    const double mot_lo = std::max(cfg.tau_mot_lo, cfg.p_mot_lo / v_den);
    const double mot_hi = std::min(cfg.tau_mot_hi, cfg.p_mot_hi / v_den);
    u_lo.row(t) = Eigen::RowVector3d(0.0, mot_lo, 0.0);
    u_hi.row(t) = Eigen::RowVector3d(kInf, mot_hi, cfg.tau_brk_hi);
  }
  spec.x_req = Timeline::schedule(x_req);
  spec.x_hi = Timeline::schedule(x_hi);
  spec.x_lo = Timeline::schedule(x_lo);
  spec.x_soft_lo = Timeline::schedule(soft_lo);
  spec.u_lo = Timeline::schedule(u_lo);
  spec.u_hi = Timeline::schedule(u_hi);
  return spec;
}

}  // namespace sdyn
