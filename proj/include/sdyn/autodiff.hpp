#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sdyn::ad {

enum class Op : std::uint8_t {
  Const,
  Input,
  Param,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Sinh,
  Asinh,
  Tanh,
  Relu,
  Sqr,
};

struct Node {
  Op op;
  std::int32_t a = -1;
  std::int32_t b = -1;
  double aux = 0.0;  // constant value, or input/param slot index
};

class Tape;

/// Handle to a node on a Tape. Arithmetic on handles records new nodes, so a
/// computation written once against Expr builds a reusable graph.
struct Expr {
  Tape* tape = nullptr;
  std::int32_t id = -1;
};

/// A write-once computation graph over scalar nodes. Built per model
/// architecture, then evaluated many times against different parameter and
/// input vectors without further allocation.
class Tape {
 public:
  Expr constant(double v);
  Expr input(int slot);
  Expr param(int slot);
  /// Param leaf with the next unused slot index.
  Expr next_param();

  int n_nodes() const { return static_cast<int>(nodes_.size()); }
  int n_inputs() const { return n_inputs_; }
  int n_params() const { return n_params_; }

  Expr emit(Op op, Expr a, Expr b = {});

  /// Evaluates every node in recording order; `values` is resized to
  /// n_nodes(). Throws std::domain_error if a sinh argument exceeds the
  /// overflow guard.
  void forward(std::span<const double> params, std::span<const double> inputs,
               std::vector<double>& values) const;

  /// Reverse sweep with d(root)/d(root) = 1. Adjoints of Param and Input
  /// leaves are accumulated into `param_grad` / `input_grad`; pass an empty
  /// span to skip either. `adjoint` is caller-owned workspace.
  void backward(Expr root, std::span<const double> values,
                std::vector<double>& adjoint, std::span<double> param_grad,
                std::span<double> input_grad) const;

 private:
  std::vector<Node> nodes_;
  int n_inputs_ = 0;
  int n_params_ = 0;
};

Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr operator-(Expr a);
Expr operator+(Expr a, double b);
Expr operator+(double a, Expr b);
Expr operator-(Expr a, double b);
Expr operator-(double a, Expr b);
Expr operator*(Expr a, double b);
Expr operator*(double a, Expr b);
Expr operator/(Expr a, double b);
Expr operator/(double a, Expr b);

Expr sinh(Expr a);
Expr asinh(Expr a);
Expr tanh(Expr a);
Expr relu(Expr a);
Expr sqr(Expr a);

}  // namespace sdyn::ad

namespace sdyn {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double sqr(double x) { return x * x; }

}  // namespace sdyn
