#pragma once

#include <Eigen/Dense>
#include <memory>
#include <random>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sdyn/autodiff.hpp"

namespace sdyn {

inline constexpr double kDefaultLayerEps = 1e-2;

/// One invertible componentwise layer
///   y_i = asinh(a_i + sinh(w_i z_i + b_i)) - asinh(a_i + sinh(b_i)),
/// with w = relu(w_raw) + eps > 0, so the layer is strictly increasing and
/// maps 0 to 0 exactly.
struct SinhLayer {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd w_raw;
  double eps = kDefaultLayerEps;

  int dim() const { return static_cast<int>(a.size()); }
  Eigen::VectorXd weights() const;  // relu(w_raw) + eps

  Eigen::VectorXd forward(const Eigen::VectorXd& z) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd& y) const;
  Eigen::VectorXd diag_jacobian(const Eigen::VectorXd& z) const;

  static SinhLayer identity_init(int dim, double eps = kDefaultLayerEps);
};

/// Composition of SinhLayers: a componentwise strictly increasing
/// diffeomorphism fixing 0, with closed-form inverse and diagonal Jacobian.
/// Zero layers means the identity map.
class MonotoneTransform {
 public:
  MonotoneTransform() = default;
  explicit MonotoneTransform(int dim) : dim_(dim) {}
  MonotoneTransform(int dim, std::vector<SinhLayer> layers);

  static MonotoneTransform identity_init(int dim, int n_layers,
                                         double eps = kDefaultLayerEps);

  int dim() const { return dim_; }
  int n_layers() const { return static_cast<int>(layers_.size()); }
  const std::vector<SinhLayer>& layers() const { return layers_; }
  std::vector<SinhLayer>& layers() { return layers_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& z) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd& y) const;
  /// d forward_i / d z_i, strictly positive.
  Eigen::VectorXd diag_jacobian(const Eigen::VectorXd& z) const;

  int param_count() const { return n_layers() * 3 * dim_; }

 private:
  int dim_ = 0;
  std::vector<SinhLayer> layers_;
};

/// Fully connected net with three weight layers (two tanh hidden layers,
/// identity output), used to parameterize per-layer transform coefficients as
/// functions of the conditioning state.
struct Hypernet {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;

  int in_dim() const { return static_cast<int>(w1.cols()); }
  int out_dim() const { return static_cast<int>(w3.rows()); }
  int param_count() const;

  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;

  /// Hidden weights drawn uniform in +-0.5/sqrt(fan_in); output layer zeroed
  /// with bias `out_bias`, so the net starts as the constant map x -> out_bias.
  static Hypernet constant_init(int in, int hidden, int out,
                                const Eigen::VectorXd& out_bias,
                                std::mt19937_64& rng);
};

/// Input transform whose per-layer coefficients (a, b, w_raw) are produced by
/// hypernets of the conditioning state; strictly increasing in u for every x,
/// with Psi(0;x) = 0 for all x.
class ConditionedTransform {
 public:
  struct LayerNets {
    Hypernet a, b, w_raw;
  };

  ConditionedTransform() = default;
  ConditionedTransform(int dim, int cond_dim, std::vector<LayerNets> nets,
                       double eps = kDefaultLayerEps);

  static ConditionedTransform identity_init(int dim, int cond_dim, int n_layers,
                                            int hidden, std::mt19937_64& rng,
                                            double eps = kDefaultLayerEps);

  int dim() const { return dim_; }
  int cond_dim() const { return cond_dim_; }
  int n_layers() const { return static_cast<int>(nets_.size()); }
  double eps() const { return eps_; }
  const std::vector<LayerNets>& nets() const { return nets_; }
  std::vector<LayerNets>& nets() { return nets_; }

  /// The x-frozen transform with materialized layer coefficients.
  MonotoneTransform materialize(const Eigen::VectorXd& x) const;

  Eigen::VectorXd eval(const Eigen::VectorXd& u, const Eigen::VectorXd& x) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd& v, const Eigen::VectorXd& x) const;
  Eigen::VectorXd diag_jacobian_u(const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& x) const;

  struct Jacobians {
    Eigen::VectorXd du;  // diagonal of d Psi / d u
    Eigen::MatrixXd dx;  // dim x cond_dim
  };
  /// Reverse-mode Jacobians through the hypernets.
  Jacobians jacobians(const Eigen::VectorXd& u, const Eigen::VectorXd& x) const;

  int param_count() const;

 private:
  void build_jacobian_tape();

  int dim_ = 0;
  int cond_dim_ = 0;
  double eps_ = kDefaultLayerEps;
  std::vector<LayerNets> nets_;

  struct JacTape {
    ad::Tape tape;
    std::vector<ad::Expr> roots;
  };
  std::shared_ptr<const JacTape> jac_;  // built once; shared across copies
};

/// Psi: either x-independent (a plain MonotoneTransform) or conditioned on x.
class InputTransform {
 public:
  InputTransform() = default;
  InputTransform(MonotoneTransform t) : impl_(std::move(t)) {}
  InputTransform(ConditionedTransform t) : impl_(std::move(t)) {}

  bool state_dependent() const {
    return std::holds_alternative<ConditionedTransform>(impl_);
  }
  int dim() const;

  Eigen::VectorXd eval(const Eigen::VectorXd& u, const Eigen::VectorXd& x) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd& v, const Eigen::VectorXd& x) const;
  Eigen::VectorXd diag_jacobian_u(const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& x) const;
  /// d Psi / d x; zero when x-independent.
  Eigen::MatrixXd x_jacobian(const Eigen::VectorXd& u,
                             const Eigen::VectorXd& x) const;

  int param_count() const;

  const MonotoneTransform* as_constant() const {
    return std::get_if<MonotoneTransform>(&impl_);
  }
  MonotoneTransform* as_constant() { return std::get_if<MonotoneTransform>(&impl_); }
  const ConditionedTransform* as_conditioned() const {
    return std::get_if<ConditionedTransform>(&impl_);
  }
  ConditionedTransform* as_conditioned() {
    return std::get_if<ConditionedTransform>(&impl_);
  }

 private:
  std::variant<MonotoneTransform, ConditionedTransform> impl_;
};

nlohmann::json transform_to_json(const MonotoneTransform& t);
MonotoneTransform transform_from_json(const nlohmann::json& j);
nlohmann::json input_transform_to_json(const InputTransform& t);
InputTransform input_transform_from_json(const nlohmann::json& j);

}  // namespace sdyn
