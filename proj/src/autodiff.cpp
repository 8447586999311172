#include "sdyn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdyn::ad {

namespace {
constexpr double kSinhGuard = 700.0;  // sinh overflows double near 710
}

Expr Tape::constant(double v) {
  nodes_.push_back({Op::Const, -1, -1, v});
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Expr Tape::input(int slot) {
  n_inputs_ = std::max(n_inputs_, slot + 1);
  nodes_.push_back({Op::Input, -1, -1, static_cast<double>(slot)});
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Expr Tape::param(int slot) {
  n_params_ = std::max(n_params_, slot + 1);
  nodes_.push_back({Op::Param, -1, -1, static_cast<double>(slot)});
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Expr Tape::next_param() { return param(n_params_); }

Expr Tape::emit(Op op, Expr a, Expr b) {
  nodes_.push_back({op, a.id, b.id, 0.0});
  return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::forward(std::span<const double> params,
                   std::span<const double> inputs,
                   std::vector<double>& values) const {
  values.resize(nodes_.size());
  double* v = values.data();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::Const: v[i] = n.aux; break;
      case Op::Input: v[i] = inputs[static_cast<std::size_t>(n.aux)]; break;
      case Op::Param: v[i] = params[static_cast<std::size_t>(n.aux)]; break;
      case Op::Add: v[i] = v[n.a] + v[n.b]; break;
      case Op::Sub: v[i] = v[n.a] - v[n.b]; break;
      case Op::Mul: v[i] = v[n.a] * v[n.b]; break;
      case Op::Div: v[i] = v[n.a] / v[n.b]; break;
      case Op::Neg: v[i] = -v[n.a]; break;
      case Op::Sinh:
        if (!(std::abs(v[n.a]) <= kSinhGuard))
          throw std::domain_error("sinh argument exceeds overflow guard");
        v[i] = std::sinh(v[n.a]);
        break;
      case Op::Asinh: v[i] = std::asinh(v[n.a]); break;
      case Op::Tanh: v[i] = std::tanh(v[n.a]); break;
      case Op::Relu: v[i] = v[n.a] > 0.0 ? v[n.a] : 0.0; break;
      case Op::Sqr: v[i] = v[n.a] * v[n.a]; break;
    }
  }
}

void Tape::backward(Expr root, std::span<const double> values,
                    std::vector<double>& adjoint, std::span<double> param_grad,
                    std::span<double> input_grad) const {
  adjoint.assign(nodes_.size(), 0.0);
  adjoint[root.id] = 1.0;
  const double* v = values.data();
  double* g = adjoint.data();
  for (std::int32_t i = root.id; i >= 0; --i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::Const: break;
      case Op::Input:
        if (!input_grad.empty()) input_grad[static_cast<std::size_t>(n.aux)] += gi;
        break;
      case Op::Param:
        if (!param_grad.empty()) param_grad[static_cast<std::size_t>(n.aux)] += gi;
        break;
      case Op::Add:
        g[n.a] += gi;
        g[n.b] += gi;
        break;
      case Op::Sub:
        g[n.a] += gi;
        g[n.b] -= gi;
        break;
      case Op::Mul:
        g[n.a] += gi * v[n.b];
        g[n.b] += gi * v[n.a];
        break;
      case Op::Div:
        g[n.a] += gi / v[n.b];
        g[n.b] -= gi * v[i] / v[n.b];
        break;
      case Op::Neg: g[n.a] -= gi; break;
      case Op::Sinh: g[n.a] += gi * std::cosh(v[n.a]); break;
      case Op::Asinh: g[n.a] += gi / std::sqrt(1.0 + v[n.a] * v[n.a]); break;
      case Op::Tanh: g[n.a] += gi * (1.0 - v[i] * v[i]); break;
      case Op::Relu:
        // subgradient 0 at the kink
        if (v[n.a] > 0.0) g[n.a] += gi;
        break;
      case Op::Sqr: g[n.a] += 2.0 * gi * v[n.a]; break;
    }
  }
}

namespace {
Expr binary(Op op, Expr a, Expr b) { return a.tape->emit(op, a, b); }
Expr unary(Op op, Expr a) { return a.tape->emit(op, a); }
}  // namespace

Expr operator+(Expr a, Expr b) { return binary(Op::Add, a, b); }
Expr operator-(Expr a, Expr b) { return binary(Op::Sub, a, b); }
Expr operator*(Expr a, Expr b) { return binary(Op::Mul, a, b); }
Expr operator/(Expr a, Expr b) { return binary(Op::Div, a, b); }
Expr operator-(Expr a) { return unary(Op::Neg, a); }
Expr operator+(Expr a, double b) { return a + a.tape->constant(b); }
Expr operator+(double a, Expr b) { return b.tape->constant(a) + b; }
Expr operator-(Expr a, double b) { return a - a.tape->constant(b); }
Expr operator-(double a, Expr b) { return b.tape->constant(a) - b; }
Expr operator*(Expr a, double b) { return a * a.tape->constant(b); }
Expr operator*(double a, Expr b) { return b.tape->constant(a) * b; }
Expr operator/(Expr a, double b) { return a / a.tape->constant(b); }
Expr operator/(double a, Expr b) { return b.tape->constant(a) / b; }

Expr sinh(Expr a) { return unary(Op::Sinh, a); }
Expr asinh(Expr a) { return unary(Op::Asinh, a); }
Expr tanh(Expr a) { return unary(Op::Tanh, a); }
Expr relu(Expr a) { return unary(Op::Relu, a); }
Expr sqr(Expr a) { return unary(Op::Sqr, a); }

}  // namespace sdyn::ad
