// Templated math kernels instantiated with T = double (direct evaluation) and
// T = ad::Expr (graph recording). Parameter order consumed here is the
// canonical flattening order used by Model::params()/set_params().
#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "sdyn/autodiff.hpp"
#include "sdyn/sign.hpp"

namespace sdyn::detail {

inline constexpr double kSinhGuard = 700.0;

inline void guard_sinh_arg(double v) {
  if (!(std::abs(v) <= kSinhGuard))
    throw std::domain_error("transform overflow: |sinh argument| > 700");
}
inline void guard_sinh_arg(const ad::Expr&) {}  // guarded during Tape::forward

inline double make_const(double v, double) { return v; }
inline ad::Expr make_const(double v, ad::Expr like) { return like.tape->constant(v); }

template <class T>
struct LayerView {
  std::vector<T> a, b, w_raw;
  double eps = 0.0;
};

template <class T>
struct TransformView {
  std::vector<LayerView<T>> layers;  // empty = identity
};

template <class T>
struct HypernetView {
  int in = 0, hidden = 0, out = 0;
  std::vector<T> w1, b1, w2, b2, w3, b3;  // weights row-major
};

template <class T>
struct ConditionedView {
  std::vector<std::array<HypernetView<T>, 3>> nets;  // per layer: a, b, w_raw
  double eps = 0.0;
};

template <class T>
struct CoreView {
  int n_x = 0, n_u = 0;
  std::vector<T> a_raw, b_raw, c_raw;  // row-major
  const SignPattern* pattern = nullptr;
  double eps = 0.0;
};

template <class T>
struct ElView {
  CoreView<T> core;
  TransformView<T> phi;
  std::variant<TransformView<T>, ConditionedView<T>> psi;
};

template <class T>
T effective_weight(const T& w_raw, double eps) {
  using sdyn::relu;
  using ad::relu;
  return relu(w_raw) + eps;
}

/// Sign-set reparameterization of one linear-core entry.
template <class T>
T effective_entry(const T& raw, SignSet s, double eps) {
  using sdyn::relu;
  using ad::relu;
  if (s == SignSet::any()) return raw;
  if (s == SignSet::only_zero()) return make_const(0.0, raw);
  if (s == SignSet::nonneg()) return relu(raw);
  if (s == SignSet::nonpos()) return make_const(0.0, raw) - relu(raw);
  if (s == SignSet::strictly(1)) return relu(raw) + eps;
  if (s == SignSet::strictly(-1)) return make_const(0.0, raw) - (relu(raw) + eps);
  throw std::invalid_argument(
      "sign set " + s.str() + " has no continuous reparameterization");
}

template <class T>
T layer_fwd_scalar(const T& a, const T& b, const T& w, const T& z) {
  using std::asinh;
  using std::sinh;
  using ad::asinh;
  using ad::sinh;
  T arg = w * z + b;
  guard_sinh_arg(arg);
  guard_sinh_arg(b);
  return asinh(a + sinh(arg)) - asinh(a + sinh(b));
}

template <class T>
T layer_inv_scalar(const T& a, const T& b, const T& w, const T& y) {
  using std::asinh;
  using std::sinh;
  using ad::asinh;
  using ad::sinh;
  guard_sinh_arg(b);
  T shift = asinh(a + sinh(b));
  T arg = y + shift;
  guard_sinh_arg(arg);
  return (asinh(sinh(arg) - a) - b) / w;
}

template <class T>
std::vector<T> transform_fwd(const TransformView<T>& t, std::vector<T> z) {
  for (const auto& l : t.layers)
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] = layer_fwd_scalar(l.a[i], l.b[i], effective_weight(l.w_raw[i], l.eps),
                              z[i]);
  return z;
}

template <class T>
std::vector<T> transform_inv(const TransformView<T>& t, std::vector<T> y) {
  for (auto it = t.layers.rbegin(); it != t.layers.rend(); ++it)
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = layer_inv_scalar(it->a[i], it->b[i],
                              effective_weight(it->w_raw[i], it->eps), y[i]);
  return y;
}

template <class T>
std::vector<T> hypernet_fwd(const HypernetView<T>& h, std::span<const T> x) {
  using std::tanh;
  using ad::tanh;
  std::vector<T> h1(h.hidden, make_const(0.0, h.b1[0]));
  for (int i = 0; i < h.hidden; ++i) {
    T acc = h.b1[i];
    for (int j = 0; j < h.in; ++j) acc = acc + h.w1[i * h.in + j] * x[j];
    h1[i] = tanh(acc);
  }
  std::vector<T> h2(h.hidden, make_const(0.0, h.b1[0]));
  for (int i = 0; i < h.hidden; ++i) {
    T acc = h.b2[i];
    for (int j = 0; j < h.hidden; ++j) acc = acc + h.w2[i * h.hidden + j] * h1[j];
    h2[i] = tanh(acc);
  }
  std::vector<T> out;
  out.reserve(h.out);
  for (int i = 0; i < h.out; ++i) {
    T acc = h.b3[i];
    for (int j = 0; j < h.hidden; ++j) acc = acc + h.w3[i * h.hidden + j] * h2[j];
    out.push_back(acc);
  }
  return out;
}

template <class T>
std::vector<T> conditioned_fwd(const ConditionedView<T>& c, std::vector<T> u,
                               std::span<const T> x) {
  for (const auto& nets : c.nets) {
    std::vector<T> a = hypernet_fwd(nets[0], x);
    std::vector<T> b = hypernet_fwd(nets[1], x);
    std::vector<T> wr = hypernet_fwd(nets[2], x);
    for (std::size_t i = 0; i < u.size(); ++i)
      u[i] = layer_fwd_scalar(a[i], b[i], effective_weight(wr[i], c.eps), u[i]);
  }
  return u;
}

template <class T>
std::vector<T> psi_fwd(const std::variant<TransformView<T>, ConditionedView<T>>& psi,
                       std::vector<T> u, std::span<const T> x) {
  if (const auto* t = std::get_if<TransformView<T>>(&psi))
    return transform_fwd(*t, std::move(u));
  return conditioned_fwd(std::get<ConditionedView<T>>(psi), std::move(u), x);
}

/// One-step prediction Phi^{-1}(A Phi(x) + B Psi(u;x) + c) with the
/// sign-reparameterized effective core.
template <class T>
std::vector<T> el_predict(const ElView<T>& m, std::span<const T> x,
                          std::span<const T> u) {
  const int n_x = m.core.n_x, n_u = m.core.n_u;
  const SignPattern& pat = *m.core.pattern;

  std::vector<T> xi = transform_fwd(m.phi, std::vector<T>(x.begin(), x.end()));
  std::vector<T> v = psi_fwd(m.psi, std::vector<T>(u.begin(), u.end()), x);

  std::vector<T> lin;
  lin.reserve(n_x);
  for (int i = 0; i < n_x; ++i) {
    T acc = effective_entry(m.core.c_raw[i], pat.s_zero[i], m.core.eps);
    for (int j = 0; j < n_x; ++j)
      acc = acc + effective_entry(m.core.a_raw[i * n_x + j], pat.state(i, j),
                                  m.core.eps) *
                      xi[j];
    for (int j = 0; j < n_u; ++j)
      acc = acc + effective_entry(m.core.b_raw[i * n_u + j], pat.input(i, j),
                                  m.core.eps) *
                      v[j];
    lin.push_back(acc);
  }
  return transform_inv(m.phi, std::move(lin));
}

/// Plain fully connected net x,u -> x_next used by the baseline model.
enum class MlpActivation { tanh, relu };

template <class T>
struct MlpView {
  std::vector<std::vector<T>> weights;  // row-major, layer l: out_l x in_l
  std::vector<std::vector<T>> biases;
  std::vector<int> widths;  // in, hidden..., out
  MlpActivation act = MlpActivation::tanh;
};

template <class T>
std::vector<T> mlp_fwd(const MlpView<T>& m, std::span<const T> in) {
  using std::tanh;
  using ad::tanh;
  using sdyn::relu;
  using ad::relu;
  std::vector<T> h(in.begin(), in.end());
  const int n_layers = static_cast<int>(m.weights.size());
  for (int l = 0; l < n_layers; ++l) {
    const int n_in = m.widths[l], n_out = m.widths[l + 1];
    std::vector<T> next;
    next.reserve(n_out);
    for (int i = 0; i < n_out; ++i) {
      T acc = m.biases[l][i];
      for (int j = 0; j < n_in; ++j) acc = acc + m.weights[l][i * n_in + j] * h[j];
      if (l + 1 < n_layers)
        acc = m.act == MlpActivation::tanh ? tanh(acc) : relu(acc);
      next.push_back(acc);
    }
    h = std::move(next);
  }
  return h;
}

}  // namespace sdyn::detail
