#include "sdyn/transforms.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "views.hpp"

namespace sdyn {

namespace {

void guard_arg(double v) { detail::guard_sinh_arg(v); }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Eigen::VectorXd SinhLayer::weights() const {
  return w_raw.array().max(0.0) + eps;
}

Eigen::VectorXd SinhLayer::forward(const Eigen::VectorXd& z) const {
  if (z.size() != a.size()) throw std::invalid_argument("SinhLayer: dim mismatch");
  Eigen::VectorXd w = weights();
  Eigen::VectorXd y(z.size());
  for (int i = 0; i < z.size(); ++i) {
    const double arg = w[i] * z[i] + b[i];
    guard_arg(arg);
    guard_arg(b[i]);
    y[i] = std::asinh(a[i] + std::sinh(arg)) - std::asinh(a[i] + std::sinh(b[i]));
  }
  return y;
}

Eigen::VectorXd SinhLayer::inverse(const Eigen::VectorXd& y) const {
  if (y.size() != a.size()) throw std::invalid_argument("SinhLayer: dim mismatch");
  Eigen::VectorXd w = weights();
  Eigen::VectorXd z(y.size());
  for (int i = 0; i < y.size(); ++i) {
    guard_arg(b[i]);
    const double shift = std::asinh(a[i] + std::sinh(b[i]));
    const double arg = y[i] + shift;
    guard_arg(arg);
    z[i] = (std::asinh(std::sinh(arg) - a[i]) - b[i]) / w[i];
  }
  return z;
}

Eigen::VectorXd SinhLayer::diag_jacobian(const Eigen::VectorXd& z) const {
  Eigen::VectorXd w = weights();
  Eigen::VectorXd d(z.size());
  for (int i = 0; i < z.size(); ++i) {
    const double arg = w[i] * z[i] + b[i];
    guard_arg(arg);
    const double s = a[i] + std::sinh(arg);
    d[i] = w[i] * std::cosh(arg) / std::sqrt(1.0 + s * s);
  }
  return d;
}

SinhLayer SinhLayer::identity_init(int dim, double eps) {
  SinhLayer l;
  l.a = Eigen::VectorXd::Zero(dim);
  l.b = Eigen::VectorXd::Zero(dim);
  l.w_raw = Eigen::VectorXd::Constant(dim, 1.0 - eps);  // effective weight 1
  l.eps = eps;
  return l;
}

MonotoneTransform::MonotoneTransform(int dim, std::vector<SinhLayer> layers)
    : dim_(dim), layers_(std::move(layers)) {
  for (const auto& l : layers_)
    if (l.dim() != dim_)
      throw std::invalid_argument("MonotoneTransform: layer dim mismatch");
}

MonotoneTransform MonotoneTransform::identity_init(int dim, int n_layers,
                                                   double eps) {
  std::vector<SinhLayer> layers;
  layers.reserve(n_layers);
  for (int i = 0; i < n_layers; ++i) layers.push_back(SinhLayer::identity_init(dim, eps));
  return MonotoneTransform(dim, std::move(layers));
}

Eigen::VectorXd MonotoneTransform::forward(const Eigen::VectorXd& z) const {
  Eigen::VectorXd y = z;
  for (const auto& l : layers_) y = l.forward(y);
  return y;
}

Eigen::VectorXd MonotoneTransform::inverse(const Eigen::VectorXd& y) const {
  Eigen::VectorXd z = y;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) z = it->inverse(z);
  return z;
}

Eigen::VectorXd MonotoneTransform::diag_jacobian(const Eigen::VectorXd& z) const {
  Eigen::VectorXd d = Eigen::VectorXd::Ones(z.size());
  Eigen::VectorXd y = z;
  for (const auto& l : layers_) {
    d = d.cwiseProduct(l.diag_jacobian(y));
    y = l.forward(y);
  }
  return d;
}

int Hypernet::param_count() const {
  return static_cast<int>(w1.size() + b1.size() + w2.size() + b2.size() +
                          w3.size() + b3.size());
}

Eigen::VectorXd Hypernet::eval(const Eigen::VectorXd& x) const {
  Eigen::VectorXd h1 = (w1 * x + b1).array().tanh();
  Eigen::VectorXd h2 = (w2 * h1 + b2).array().tanh();
  return w3 * h2 + b3;
}

Hypernet Hypernet::constant_init(int in, int hidden, int out,
                                 const Eigen::VectorXd& out_bias,
                                 std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  auto rand_mat = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    const double scale = 1.0 / std::sqrt(static_cast<double>(c));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = unit(rng) * scale;
    return m;
  };
  Hypernet h;
  h.w1 = rand_mat(hidden, in);
  h.b1 = Eigen::VectorXd::Zero(hidden);
  h.w2 = rand_mat(hidden, hidden);
  h.b2 = Eigen::VectorXd::Zero(hidden);
  h.w3 = Eigen::MatrixXd::Zero(out, hidden);
  h.b3 = out_bias;
  return h;
}

ConditionedTransform::ConditionedTransform(int dim, int cond_dim,
                                           std::vector<LayerNets> nets, double eps)
    : dim_(dim), cond_dim_(cond_dim), eps_(eps), nets_(std::move(nets)) {
  for (const auto& n : nets_) {
    if (n.a.in_dim() != cond_dim_ || n.b.in_dim() != cond_dim_ ||
        n.w_raw.in_dim() != cond_dim_)
      throw std::invalid_argument("ConditionedTransform: hypernet input dim mismatch");
    if (n.a.out_dim() != dim_ || n.b.out_dim() != dim_ || n.w_raw.out_dim() != dim_)
      throw std::invalid_argument("ConditionedTransform: hypernet output dim mismatch");
  }
  if (!(eps_ > 0.0)) throw std::invalid_argument("ConditionedTransform: eps must be > 0");
  build_jacobian_tape();
}

ConditionedTransform ConditionedTransform::identity_init(int dim, int cond_dim,
                                                         int n_layers, int hidden,
                                                         std::mt19937_64& rng,
                                                         double eps) {
  std::vector<LayerNets> nets;
  nets.reserve(n_layers);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim);
  const Eigen::VectorXd one_minus_eps = Eigen::VectorXd::Constant(dim, 1.0 - eps);
  for (int i = 0; i < n_layers; ++i) {
    LayerNets n;
    n.a = Hypernet::constant_init(cond_dim, hidden, dim, zero, rng);
    n.b = Hypernet::constant_init(cond_dim, hidden, dim, zero, rng);
    n.w_raw = Hypernet::constant_init(cond_dim, hidden, dim, one_minus_eps, rng);
    nets.push_back(std::move(n));
  }
  return ConditionedTransform(dim, cond_dim, std::move(nets), eps);
}

MonotoneTransform ConditionedTransform::materialize(const Eigen::VectorXd& x) const {
  if (x.size() != cond_dim_)
    throw std::invalid_argument("ConditionedTransform: conditioning dim mismatch");
  std::vector<SinhLayer> layers;
  layers.reserve(nets_.size());
  for (const auto& n : nets_) {
    SinhLayer l;
    l.a = n.a.eval(x);
    l.b = n.b.eval(x);
    l.w_raw = n.w_raw.eval(x);
    l.eps = eps_;
    layers.push_back(std::move(l));
  }
  return MonotoneTransform(dim_, std::move(layers));
}

Eigen::VectorXd ConditionedTransform::eval(const Eigen::VectorXd& u,
                                           const Eigen::VectorXd& x) const {
  return materialize(x).forward(u);
}

Eigen::VectorXd ConditionedTransform::inverse(const Eigen::VectorXd& v,
                                              const Eigen::VectorXd& x) const {
  return materialize(x).inverse(v);
}

Eigen::VectorXd ConditionedTransform::diag_jacobian_u(const Eigen::VectorXd& u,
                                                      const Eigen::VectorXd& x) const {
  return materialize(x).diag_jacobian(u);
}

void ConditionedTransform::build_jacobian_tape() {
  auto jt = std::make_shared<JacTape>();
  ad::Tape& tape = jt->tape;
  std::vector<ad::Expr> u_in, x_in;
  for (int i = 0; i < dim_; ++i) u_in.push_back(tape.input(i));
  for (int i = 0; i < cond_dim_; ++i) x_in.push_back(tape.input(dim_ + i));
  auto view = detail::conditioned_view<ad::Expr>(
      *this, [&tape](double) { return tape.next_param(); });
  jt->roots = detail::conditioned_fwd<ad::Expr>(view, u_in, x_in);
  jac_ = std::move(jt);
}

ConditionedTransform::Jacobians ConditionedTransform::jacobians(
    const Eigen::VectorXd& u, const Eigen::VectorXd& x) const {
  std::vector<double> params;
  params.reserve(param_count());
  detail::conditioned_view<double>(*this, [&params](double v) {
    params.push_back(v);
    return v;
  });

  std::vector<double> inputs(dim_ + cond_dim_);
  for (int i = 0; i < dim_; ++i) inputs[i] = u[i];
  for (int i = 0; i < cond_dim_; ++i) inputs[dim_ + i] = x[i];

  std::vector<double> values, adjoint;
  jac_->tape.forward(params, inputs, values);

  Jacobians out;
  out.du = Eigen::VectorXd::Zero(dim_);
  out.dx = Eigen::MatrixXd::Zero(dim_, cond_dim_);
  std::vector<double> igrad(dim_ + cond_dim_);
  for (int i = 0; i < dim_; ++i) {
    std::fill(igrad.begin(), igrad.end(), 0.0);
    jac_->tape.backward(jac_->roots[i], values, adjoint, {}, igrad);
    out.du[i] = igrad[i];
    for (int j = 0; j < cond_dim_; ++j) out.dx(i, j) = igrad[dim_ + j];
  }
  return out;
}

int ConditionedTransform::param_count() const {
  int n = 0;
  for (const auto& nets : nets_)
    n += nets.a.param_count() + nets.b.param_count() + nets.w_raw.param_count();
  return n;
}

int InputTransform::dim() const {
  if (const auto* c = as_constant()) return c->dim();
  return as_conditioned()->dim();
}

Eigen::VectorXd InputTransform::eval(const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& x) const {
  if (const auto* c = as_constant()) return c->forward(u);
  return as_conditioned()->eval(u, x);
}

Eigen::VectorXd InputTransform::inverse(const Eigen::VectorXd& v,
                                        const Eigen::VectorXd& x) const {
  if (const auto* c = as_constant()) return c->inverse(v);
  return as_conditioned()->inverse(v, x);
}

Eigen::VectorXd InputTransform::diag_jacobian_u(const Eigen::VectorXd& u,
                                                const Eigen::VectorXd& x) const {
  if (const auto* c = as_constant()) return c->diag_jacobian(u);
  return as_conditioned()->diag_jacobian_u(u, x);
}

Eigen::MatrixXd InputTransform::x_jacobian(const Eigen::VectorXd& u,
                                           const Eigen::VectorXd& x) const {
  if (as_constant()) return Eigen::MatrixXd::Zero(dim(), x.size());
  return as_conditioned()->jacobians(u, x).dx;
}

int InputTransform::param_count() const {
  if (const auto* c = as_constant()) return c->param_count();
  return as_conditioned()->param_count();
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.begin(), v.end());
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return to_eigen(v);
}

nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (int j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd mat_from_json(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

nlohmann::json hypernet_to_json(const Hypernet& h) {
  return {{"w1", mat_to_json(h.w1)}, {"b1", vec_to_json(h.b1)},
          {"w2", mat_to_json(h.w2)}, {"b2", vec_to_json(h.b2)},
          {"w3", mat_to_json(h.w3)}, {"b3", vec_to_json(h.b3)}};
}

Hypernet hypernet_from_json(const nlohmann::json& j) {
  Hypernet h;
  h.w1 = mat_from_json(j.at("w1"));
  h.b1 = vec_from_json(j.at("b1"));
  h.w2 = mat_from_json(j.at("w2"));
  h.b2 = vec_from_json(j.at("b2"));
  h.w3 = mat_from_json(j.at("w3"));
  h.b3 = vec_from_json(j.at("b3"));
  return h;
}

}  // namespace

nlohmann::json transform_to_json(const MonotoneTransform& t) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : t.layers())
    layers.push_back({{"a", vec_to_json(l.a)},
                      {"b", vec_to_json(l.b)},
                      {"w_raw", vec_to_json(l.w_raw)},
                      {"eps", l.eps}});
  return {{"dim", t.dim()}, {"layers", layers}};
}

MonotoneTransform transform_from_json(const nlohmann::json& j) {
  std::vector<SinhLayer> layers;
  for (const auto& jl : j.at("layers")) {
    SinhLayer l;
    l.a = vec_from_json(jl.at("a"));
    l.b = vec_from_json(jl.at("b"));
    l.w_raw = vec_from_json(jl.at("w_raw"));
    l.eps = jl.at("eps").get<double>();
    layers.push_back(std::move(l));
  }
  return MonotoneTransform(j.at("dim").get<int>(), std::move(layers));
}

nlohmann::json input_transform_to_json(const InputTransform& t) {
  if (const auto* c = t.as_constant())
    return {{"kind", "constant"}, {"transform", transform_to_json(*c)}};
  const auto* ct = t.as_conditioned();
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& nets : ct->nets())
    layers.push_back({{"a", hypernet_to_json(nets.a)},
                      {"b", hypernet_to_json(nets.b)},
                      {"w_raw", hypernet_to_json(nets.w_raw)}});
  return {{"kind", "conditioned"},
          {"dim", ct->dim()},
          {"cond_dim", ct->cond_dim()},
          {"eps", ct->eps()},
          {"layers", layers}};
}

InputTransform input_transform_from_json(const nlohmann::json& j) {
  if (j.at("kind").get<std::string>() == "constant")
    return InputTransform(transform_from_json(j.at("transform")));
  std::vector<ConditionedTransform::LayerNets> nets;
  for (const auto& jl : j.at("layers")) {
    ConditionedTransform::LayerNets n;
    n.a = hypernet_from_json(jl.at("a"));
    n.b = hypernet_from_json(jl.at("b"));
    n.w_raw = hypernet_from_json(jl.at("w_raw"));
    nets.push_back(std::move(n));
  }
  return InputTransform(ConditionedTransform(j.at("dim").get<int>(),
                                             j.at("cond_dim").get<int>(),
                                             std::move(nets),
                                             j.at("eps").get<double>()));
}

}  // namespace sdyn
