// Builders mapping the structured parameter storage onto kernel views. The
// traversal order here *is* the canonical parameter order: the same functions
// build double views, record tape parameters, and flatten values, so the
// three can never disagree. The *_visit functions mirror the order for
// mutation (set_params).
#pragma once

#include "kernels.hpp"
#include "sdyn/transforms.hpp"

namespace sdyn::detail {

template <class T, class Emit>
LayerView<T> layer_view(const SinhLayer& l, Emit&& emit) {
  LayerView<T> v;
  v.eps = l.eps;
  const int n = l.dim();
  v.a.reserve(n);
  v.b.reserve(n);
  v.w_raw.reserve(n);
  for (int i = 0; i < n; ++i) v.a.push_back(emit(l.a[i]));
  for (int i = 0; i < n; ++i) v.b.push_back(emit(l.b[i]));
  for (int i = 0; i < n; ++i) v.w_raw.push_back(emit(l.w_raw[i]));
  return v;
}

template <class F>
void layer_visit(SinhLayer& l, F&& f) {
  for (int i = 0; i < l.dim(); ++i) f(l.a[i]);
  for (int i = 0; i < l.dim(); ++i) f(l.b[i]);
  for (int i = 0; i < l.dim(); ++i) f(l.w_raw[i]);
}

template <class T, class Emit>
TransformView<T> transform_view(const MonotoneTransform& t, Emit&& emit) {
  TransformView<T> v;
  v.layers.reserve(t.n_layers());
  for (const auto& l : t.layers()) v.layers.push_back(layer_view<T>(l, emit));
  return v;
}

template <class F>
void transform_visit(MonotoneTransform& t, F&& f) {
  for (auto& l : t.layers()) layer_visit(l, f);
}

template <class T, class Emit>
HypernetView<T> hypernet_view(const Hypernet& h, Emit&& emit) {
  HypernetView<T> v;
  v.in = h.in_dim();
  v.hidden = static_cast<int>(h.w1.rows());
  v.out = h.out_dim();
  auto mat = [&](const Eigen::MatrixXd& m, std::vector<T>& dst) {
    dst.reserve(m.size());
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) dst.push_back(emit(m(i, j)));
  };
  auto vec = [&](const Eigen::VectorXd& b, std::vector<T>& dst) {
    dst.reserve(b.size());
    for (int i = 0; i < b.size(); ++i) dst.push_back(emit(b[i]));
  };
  mat(h.w1, v.w1);
  vec(h.b1, v.b1);
  mat(h.w2, v.w2);
  vec(h.b2, v.b2);
  mat(h.w3, v.w3);
  vec(h.b3, v.b3);
  return v;
}

template <class F>
void hypernet_visit(Hypernet& h, F&& f) {
  auto mat = [&](Eigen::MatrixXd& m) {
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) f(m(i, j));
  };
  auto vec = [&](Eigen::VectorXd& b) {
    for (int i = 0; i < b.size(); ++i) f(b[i]);
  };
  mat(h.w1);
  vec(h.b1);
  mat(h.w2);
  vec(h.b2);
  mat(h.w3);
  vec(h.b3);
}

template <class T, class Emit>
ConditionedView<T> conditioned_view(const ConditionedTransform& t, Emit&& emit) {
  ConditionedView<T> v;
  v.eps = t.eps();
  v.nets.reserve(t.n_layers());
  for (const auto& nets : t.nets())
    v.nets.push_back({hypernet_view<T>(nets.a, emit), hypernet_view<T>(nets.b, emit),
                      hypernet_view<T>(nets.w_raw, emit)});
  return v;
}

template <class F>
void conditioned_visit(ConditionedTransform& t, F&& f) {
  for (auto& nets : t.nets()) {
    hypernet_visit(nets.a, f);
    hypernet_visit(nets.b, f);
    hypernet_visit(nets.w_raw, f);
  }
}

template <class T, class Emit>
std::variant<TransformView<T>, ConditionedView<T>> input_transform_view(
    const InputTransform& t, Emit&& emit) {
  if (const auto* c = t.as_constant()) return transform_view<T>(*c, emit);
  return conditioned_view<T>(*t.as_conditioned(), emit);
}

template <class F>
void input_transform_visit(InputTransform& t, F&& f) {
  if (auto* c = t.as_constant())
    transform_visit(*c, f);
  else
    conditioned_visit(*t.as_conditioned(), f);
}

}  // namespace sdyn::detail
