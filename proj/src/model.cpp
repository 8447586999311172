#include "sdyn/model.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "views.hpp"

namespace sdyn {

namespace detail {

template <class T, class Emit>
CoreView<T> core_view(const SignedLinearCore& c, Emit&& emit) {
  CoreView<T> v;
  v.n_x = c.pattern.n_x;
  v.n_u = c.pattern.n_u;
  v.pattern = &c.pattern;
  v.eps = c.eps;
  for (int i = 0; i < v.n_x; ++i)
    for (int j = 0; j < v.n_x; ++j) v.a_raw.push_back(emit(c.a_raw(i, j)));
  for (int i = 0; i < v.n_x; ++i)
    for (int j = 0; j < v.n_u; ++j) v.b_raw.push_back(emit(c.b_raw(i, j)));
  for (int i = 0; i < v.n_x; ++i) v.c_raw.push_back(emit(c.c_raw[i]));
  return v;
}

template <class F>
void core_visit(SignedLinearCore& c, F&& f) {
  for (int i = 0; i < c.a_raw.rows(); ++i)
    for (int j = 0; j < c.a_raw.cols(); ++j) f(c.a_raw(i, j));
  for (int i = 0; i < c.b_raw.rows(); ++i)
    for (int j = 0; j < c.b_raw.cols(); ++j) f(c.b_raw(i, j));
  for (int i = 0; i < c.c_raw.size(); ++i) f(c.c_raw[i]);
}

}  // namespace detail

SignedLinearCore::SignedLinearCore(Eigen::MatrixXd a, Eigen::MatrixXd b,
                                   Eigen::VectorXd c, SignPattern pat, double e)
    : a_raw(std::move(a)), b_raw(std::move(b)), c_raw(std::move(c)),
      pattern(std::move(pat)), eps(e) {
  if (a_raw.rows() != pattern.n_x || a_raw.cols() != pattern.n_x ||
      b_raw.rows() != pattern.n_x || b_raw.cols() != pattern.n_u ||
      c_raw.size() != pattern.n_x)
    throw std::invalid_argument("SignedLinearCore: dimension mismatch");
  if (!(eps > 0.0)) throw std::invalid_argument("SignedLinearCore: eps must be > 0");
  // reject sets with no continuous reparameterization (e.g. {1,-1})
  auto check = [&](const SignSet& s) { detail::effective_entry<double>(0.0, s, eps); };
  for (const auto& s : pattern.s_state) check(s);
  for (const auto& s : pattern.s_input) check(s);
  for (const auto& s : pattern.s_zero) check(s);
}

LinearSystem SignedLinearCore::effective() const {
  LinearSystem sys;
  sys.time_kind = pattern.time_kind;
  sys.A.resize(pattern.n_x, pattern.n_x);
  sys.B.resize(pattern.n_x, pattern.n_u);
  sys.c.resize(pattern.n_x);
  for (int i = 0; i < pattern.n_x; ++i) {
    for (int j = 0; j < pattern.n_x; ++j)
      sys.A(i, j) = detail::effective_entry<double>(a_raw(i, j), pattern.state(i, j), eps);
    for (int j = 0; j < pattern.n_u; ++j)
      sys.B(i, j) = detail::effective_entry<double>(b_raw(i, j), pattern.input(i, j), eps);
    sys.c[i] = detail::effective_entry<double>(c_raw[i], pattern.s_zero[i], eps);
  }
  return sys;
}

struct ELModel::ViewHolder {
  detail::ElView<double> view;
};

ELModel::ELModel(MonotoneTransform phi, InputTransform psi, SignedLinearCore core)
    : phi_(std::move(phi)), psi_(std::move(psi)), core_(std::move(core)) {
  if (phi_.dim() != core_.pattern.n_x)
    throw std::invalid_argument("ELModel: phi dimension mismatch");
  if (psi_.dim() != core_.pattern.n_u)
    throw std::invalid_argument("ELModel: psi dimension mismatch");
  if (psi_.state_dependent() && !core_.pattern.all_state_unconstrained())
    throw std::invalid_argument(
        "ELModel: state sign constraints require an x-independent input "
        "transform");
  if (psi_.state_dependent() &&
      psi_.as_conditioned()->cond_dim() != core_.pattern.n_x)
    throw std::invalid_argument("ELModel: conditioning dimension mismatch");
  sync_view();
}

// The cached view holds a pointer to this model's pattern, so copies and
// moves rebuild it against their own storage.
ELModel::ELModel(const ELModel& o) : phi_(o.phi_), psi_(o.psi_), core_(o.core_) {
  sync_view();
}

ELModel& ELModel::operator=(const ELModel& o) {
  if (this != &o) {
    phi_ = o.phi_;
    psi_ = o.psi_;
    core_ = o.core_;
    sync_view();
  }
  return *this;
}

ELModel::ELModel(ELModel&& o) noexcept
    : phi_(std::move(o.phi_)), psi_(std::move(o.psi_)), core_(std::move(o.core_)) {
  sync_view();
}

ELModel& ELModel::operator=(ELModel&& o) noexcept {
  phi_ = std::move(o.phi_);
  psi_ = std::move(o.psi_);
  core_ = std::move(o.core_);
  sync_view();
  return *this;
}

void ELModel::sync_view() {
  auto holder = std::make_shared<ViewHolder>();
  auto emit = [](double v) { return v; };
  holder->view.core = detail::core_view<double>(core_, emit);
  holder->view.core.pattern = &core_.pattern;
  holder->view.phi = detail::transform_view<double>(phi_, emit);
  holder->view.psi = detail::input_transform_view<double>(psi_, emit);
  view_ = std::move(holder);
}

int ELModel::param_count() const {
  return core_.param_count() + phi_.param_count() + psi_.param_count();
}

Eigen::VectorXd ELModel::params() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  auto& self = const_cast<ELModel&>(*this);
  auto collect = [&flat](double& v) { flat.push_back(v); };
  detail::core_visit(self.core_, collect);
  detail::transform_visit(self.phi_, collect);
  detail::input_transform_visit(self.psi_, collect);
  return Eigen::Map<const Eigen::VectorXd>(flat.data(),
                                           static_cast<Eigen::Index>(flat.size()));
}

void ELModel::set_params(const Eigen::VectorXd& theta) {
  if (theta.size() != param_count())
    throw std::invalid_argument("ELModel::set_params: size mismatch");
  int k = 0;
  auto assign = [&theta, &k](double& v) { v = theta[k++]; };
  detail::core_visit(core_, assign);
  detail::transform_visit(phi_, assign);
  detail::input_transform_visit(psi_, assign);
  sync_view();
}

Eigen::VectorXd ELModel::predict(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& u) const {
  if (x.size() != state_dim() || u.size() != input_dim())
    throw std::invalid_argument("ELModel::predict: dimension mismatch");
  std::vector<double> xs(x.begin(), x.end()), us(u.begin(), u.end());
  std::vector<double> out = detail::el_predict<double>(view_->view, xs, us);
  return Eigen::Map<const Eigen::VectorXd>(out.data(),
                                           static_cast<Eigen::Index>(out.size()));
}

std::vector<ad::Expr> ELModel::emit_predict(ad::Tape& tape,
                                            std::span<const ad::Expr> x,
                                            std::span<const ad::Expr> u) const {
  detail::ElView<ad::Expr> view;
  auto emit = [&tape](double) { return tape.next_param(); };
  view.core = detail::core_view<ad::Expr>(core_, emit);
  view.core.pattern = &core_.pattern;
  view.phi = detail::transform_view<ad::Expr>(phi_, emit);
  view.psi = detail::input_transform_view<ad::Expr>(psi_, emit);
  return detail::el_predict<ad::Expr>(view, x, u);
}

ELModel::Jacs ELModel::jacobians(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& u) const {
  const LinearSystem sys = core_.effective();
  const Eigen::VectorXd d_phi = phi_.diag_jacobian(x);
  const Eigen::VectorXd x_next = predict(x, u);
  const Eigen::VectorXd d_phi_next = phi_.diag_jacobian(x_next);

  Jacs J;
  const Eigen::VectorXd d_inv = d_phi_next.cwiseInverse();
  if (psi_.state_dependent()) {
    auto pj = psi_.as_conditioned()->jacobians(u, x);
    J.dx = d_inv.asDiagonal() *
           (sys.A * Eigen::MatrixXd(d_phi.asDiagonal()) + sys.B * pj.dx);
    J.du = d_inv.asDiagonal() * sys.B * Eigen::MatrixXd(pj.du.asDiagonal());
  } else {
    J.dx = d_inv.asDiagonal() * sys.A * Eigen::MatrixXd(d_phi.asDiagonal());
    const Eigen::VectorXd d_psi = psi_.diag_jacobian_u(u, x);
    J.du = d_inv.asDiagonal() * sys.B * Eigen::MatrixXd(d_psi.asDiagonal());
  }
  return J;
}

DynMap ELModel::as_map() const {
  return [self = *this](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return self.predict(x, u);
  };
}

ConstraintReport verify_structural(const ELModel& m, const SignPattern& pat) {
  ConstraintReport rep = check_linear(m.core().effective(), pat);

  auto check_layers = [&rep](const std::vector<SinhLayer>& layers) {
    for (const auto& l : layers) {
      if (!(l.eps > 0.0) || (l.weights().array() < l.eps).any()) {
        rep.add({Violation::Role::input, -1, -1, 0, SignSet::strictly(1),
                 l.eps, {}, {}},
                64);
      }
      if (!l.a.allFinite() || !l.b.allFinite() || !l.w_raw.allFinite())
        rep.add({Violation::Role::input, -1, -1, 0, SignSet::any(), 0.0, {}, {}},
                64);
    }
  };
  check_layers(m.phi().layers());
  if (const auto* c = m.psi().as_constant()) {
    check_layers(c->layers());
  } else {
    const auto* ct = m.psi().as_conditioned();
    if (!(ct->eps() > 0.0))
      rep.add({Violation::Role::input, -1, -1, 0, SignSet::strictly(1),
               ct->eps(), {}, {}},
              64);
    // weights are relu(net(x)) + eps for every x; check zero-fixing at x = 0
    check_layers(ct->materialize(Eigen::VectorXd::Zero(ct->cond_dim())).layers());
  }

  const Eigen::VectorXd zx = Eigen::VectorXd::Zero(m.state_dim());
  const Eigen::VectorXd zu = Eigen::VectorXd::Zero(m.input_dim());
  if (m.phi().forward(zx).cwiseAbs().maxCoeff() != 0.0)
    rep.add({Violation::Role::zero, -1, 0, 0, SignSet::only_zero(),
             m.phi().forward(zx).cwiseAbs().maxCoeff(), zx, zu},
            64);
  if (m.psi().eval(zu, zx).cwiseAbs().maxCoeff() != 0.0)
    rep.add({Violation::Role::zero, -1, 1, 0, SignSet::only_zero(),
             m.psi().eval(zu, zx).cwiseAbs().maxCoeff(), zx, zu},
            64);
  return rep;
}

// ---------------------------------------------------------------------------
// MlpModel

MlpModel::MlpModel(int n_x, int n_u, std::vector<int> hidden, Activation act,
                   std::uint64_t seed)
    : n_x_(n_x), n_u_(n_u), act_(act) {
  widths_.push_back(n_x + n_u);
  for (int h : hidden) widths_.push_back(h);
  widths_.push_back(n_x);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    const double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd w(out, in);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) w(i, j) = dist(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(out));
  }
}

int MlpModel::param_count() const {
  int n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<int>(weights_[l].size() + biases_[l].size());
  return n;
}

namespace {

template <class F>
void mlp_visit(std::vector<Eigen::MatrixXd>& ws, std::vector<Eigen::VectorXd>& bs,
               F&& f) {
  for (std::size_t l = 0; l < ws.size(); ++l) {
    for (int i = 0; i < ws[l].rows(); ++i)
      for (int j = 0; j < ws[l].cols(); ++j) f(ws[l](i, j));
    for (int i = 0; i < bs[l].size(); ++i) f(bs[l][i]);
  }
}

template <class T, class Emit>
detail::MlpView<T> mlp_view(const std::vector<Eigen::MatrixXd>& ws,
                            const std::vector<Eigen::VectorXd>& bs,
                            const std::vector<int>& widths,
                            MlpModel::Activation act, Emit&& emit) {
  detail::MlpView<T> v;
  v.widths = widths;
  v.act = act == MlpModel::Activation::tanh ? detail::MlpActivation::tanh
                                            : detail::MlpActivation::relu;
  for (std::size_t l = 0; l < ws.size(); ++l) {
    std::vector<T> w, b;
    for (int i = 0; i < ws[l].rows(); ++i)
      for (int j = 0; j < ws[l].cols(); ++j) w.push_back(emit(ws[l](i, j)));
    for (int i = 0; i < bs[l].size(); ++i) b.push_back(emit(bs[l][i]));
    v.weights.push_back(std::move(w));
    v.biases.push_back(std::move(b));
  }
  return v;
}

}  // namespace

Eigen::VectorXd MlpModel::params() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  auto& self = const_cast<MlpModel&>(*this);
  mlp_visit(self.weights_, self.biases_, [&flat](double& v) { flat.push_back(v); });
  return Eigen::Map<const Eigen::VectorXd>(flat.data(),
                                           static_cast<Eigen::Index>(flat.size()));
}

void MlpModel::set_params(const Eigen::VectorXd& theta) {
  if (theta.size() != param_count())
    throw std::invalid_argument("MlpModel::set_params: size mismatch");
  int k = 0;
  mlp_visit(weights_, biases_, [&theta, &k](double& v) { v = theta[k++]; });
}

Eigen::VectorXd MlpModel::predict(const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u) const {
  std::vector<double> in;
  in.reserve(n_x_ + n_u_);
  for (int i = 0; i < n_x_; ++i) in.push_back(x[i]);
  for (int i = 0; i < n_u_; ++i) in.push_back(u[i]);
  auto view = mlp_view<double>(weights_, biases_, widths_, act_,
                               [](double v) { return v; });
  auto out = detail::mlp_fwd<double>(view, in);
  return Eigen::Map<const Eigen::VectorXd>(out.data(),
                                           static_cast<Eigen::Index>(out.size()));
}

std::vector<ad::Expr> MlpModel::emit_predict(ad::Tape& tape,
                                             std::span<const ad::Expr> x,
                                             std::span<const ad::Expr> u) const {
  std::vector<ad::Expr> in(x.begin(), x.end());
  in.insert(in.end(), u.begin(), u.end());
  auto view = mlp_view<ad::Expr>(weights_, biases_, widths_, act_,
                                 [&tape](double) { return tape.next_param(); });
  return detail::mlp_fwd<ad::Expr>(view, in);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json ELModel::to_json() const {
  nlohmann::json j;
  j["schema"] = "sdyn.model.v1";
  j["kind"] = "el";
  j["pattern"] = pattern_to_json(core_.pattern);
  j["core"] = {{"a_raw", nlohmann::json::array()},
               {"b_raw", nlohmann::json::array()},
               {"c_raw", std::vector<double>(core_.c_raw.begin(), core_.c_raw.end())},
               {"eps", core_.eps}};
  for (int i = 0; i < core_.a_raw.rows(); ++i) {
    std::vector<double> row(core_.a_raw.cols());
    for (int k = 0; k < core_.a_raw.cols(); ++k) row[k] = core_.a_raw(i, k);
    j["core"]["a_raw"].push_back(row);
  }
  for (int i = 0; i < core_.b_raw.rows(); ++i) {
    std::vector<double> row(core_.b_raw.cols());
    for (int k = 0; k < core_.b_raw.cols(); ++k) row[k] = core_.b_raw(i, k);
    j["core"]["b_raw"].push_back(row);
  }
  j["phi"] = transform_to_json(phi_);
  j["psi"] = input_transform_to_json(psi_);
  return j;
}

nlohmann::json MlpModel::to_json() const {
  nlohmann::json j;
  j["schema"] = "sdyn.model.v1";
  j["kind"] = "mlp";
  j["n_x"] = n_x_;
  j["n_u"] = n_u_;
  j["activation"] = act_ == Activation::tanh ? "tanh" : "relu";
  j["widths"] = widths_;
  j["layers"] = nlohmann::json::array();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    nlohmann::json w = nlohmann::json::array();
    for (int i = 0; i < weights_[l].rows(); ++i) {
      std::vector<double> row(weights_[l].cols());
      for (int k = 0; k < weights_[l].cols(); ++k) row[k] = weights_[l](i, k);
      w.push_back(row);
    }
    j["layers"].push_back(
        {{"w", w},
         {"b", std::vector<double>(biases_[l].begin(), biases_[l].end())}});
  }
  return j;
}

MlpModel mlp_from_json(const nlohmann::json& j) {
  MlpModel m;
  m.n_x_ = j.at("n_x").get<int>();
  m.n_u_ = j.at("n_u").get<int>();
  m.act_ = j.at("activation").get<std::string>() == "relu"
               ? MlpModel::Activation::relu
               : MlpModel::Activation::tanh;
  m.widths_ = j.at("widths").get<std::vector<int>>();
  for (const auto& jl : j.at("layers")) {
    const auto& jw = jl.at("w");
    const int rows = static_cast<int>(jw.size());
    const int cols = rows > 0 ? static_cast<int>(jw[0].size()) : 0;
    Eigen::MatrixXd w(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < cols; ++k) w(i, k) = jw[i][k].get<double>();
    auto b = jl.at("b").get<std::vector<double>>();
    m.weights_.push_back(std::move(w));
    m.biases_.push_back(
        Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
  }
  return m;
}

std::unique_ptr<Model> model_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "mlp") return std::make_unique<MlpModel>(mlp_from_json(j));
  if (kind != "el") throw std::invalid_argument("model_from_json: unknown kind " + kind);

  SignPattern pat = pattern_from_json(j.at("pattern"));
  const auto& jc = j.at("core");
  Eigen::MatrixXd a(pat.n_x, pat.n_x), b(pat.n_x, pat.n_u);
  for (int i = 0; i < pat.n_x; ++i)
    for (int k = 0; k < pat.n_x; ++k) a(i, k) = jc.at("a_raw")[i][k].get<double>();
  for (int i = 0; i < pat.n_x; ++i)
    for (int k = 0; k < pat.n_u; ++k) b(i, k) = jc.at("b_raw")[i][k].get<double>();
  auto cv = jc.at("c_raw").get<std::vector<double>>();
  Eigen::VectorXd c =
      Eigen::Map<const Eigen::VectorXd>(cv.data(), static_cast<Eigen::Index>(cv.size()));
  SignedLinearCore core(std::move(a), std::move(b), std::move(c), std::move(pat),
                        jc.at("eps").get<double>());
  return std::make_unique<ELModel>(transform_from_json(j.at("phi")),
                                   input_transform_from_json(j.at("psi")),
                                   std::move(core));
}

}  // namespace sdyn
