#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sdyn/autodiff.hpp"
#include "sdyn/sign.hpp"
#include "sdyn/transforms.hpp"

namespace sdyn {

inline constexpr double kDefaultCoreEps = 1e-3;

/// Linear core (A, B, c) stored as raw values; effective entries obey the
/// sign-set reparameterization, so check_linear passes by construction:
///   {s} singleton, s != 0:  s * (relu(raw) + eps)
///   {0}:                    0
///   {1,0} / {-1,0}:         +-relu(raw)
///   {1,-1,0}:               raw
struct SignedLinearCore {
  Eigen::MatrixXd a_raw;
  Eigen::MatrixXd b_raw;
  Eigen::VectorXd c_raw;
  SignPattern pattern;
  double eps = kDefaultCoreEps;

  SignedLinearCore() = default;
  SignedLinearCore(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::VectorXd c,
                   SignPattern pat, double eps = kDefaultCoreEps);

  LinearSystem effective() const;
  int param_count() const {
    return static_cast<int>(a_raw.size() + b_raw.size() + c_raw.size());
  }
};

/// Interface shared by every trainable one-step predictor.
class Model {
 public:
  virtual ~Model() = default;
  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual int param_count() const = 0;
  virtual Eigen::VectorXd params() const = 0;
  virtual void set_params(const Eigen::VectorXd& theta) = 0;
  virtual Eigen::VectorXd predict(const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u) const = 0;
  /// Records the one-step prediction on `tape`, consuming tape parameters in
  /// the same order as params().
  virtual std::vector<ad::Expr> emit_predict(ad::Tape& tape,
                                             std::span<const ad::Expr> x,
                                             std::span<const ad::Expr> u) const = 0;
  virtual std::unique_ptr<Model> clone() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

/// Discrete exactly-linearizable model
///   x(t+1) = Phi^{-1}( A Phi(x(t)) + B Psi(u(t); x(t)) + c )
/// with componentwise strictly increasing Phi, Psi and a sign-reparameterized
/// linear core. When any state sign set is constrained, Psi must be
/// x-independent (otherwise the state-sign equivalence does not hold and
/// construction refuses the configuration).
class ELModel : public Model {
 public:
  ELModel(MonotoneTransform phi, InputTransform psi, SignedLinearCore core);
  ELModel(const ELModel& o);
  ELModel& operator=(const ELModel& o);
  ELModel(ELModel&& o) noexcept;
  ELModel& operator=(ELModel&& o) noexcept;

  int state_dim() const override { return core_.pattern.n_x; }
  int input_dim() const override { return core_.pattern.n_u; }
  int param_count() const override;
  Eigen::VectorXd params() const override;
  void set_params(const Eigen::VectorXd& theta) override;
  Eigen::VectorXd predict(const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u) const override;
  std::vector<ad::Expr> emit_predict(ad::Tape& tape, std::span<const ad::Expr> x,
                                     std::span<const ad::Expr> u) const override;
  std::unique_ptr<Model> clone() const override {
    return std::make_unique<ELModel>(*this);
  }
  nlohmann::json to_json() const override;

  const MonotoneTransform& phi() const { return phi_; }
  const InputTransform& psi() const { return psi_; }
  const SignedLinearCore& core() const { return core_; }
  const SignPattern& pattern() const { return core_.pattern; }

  struct Jacs {
    Eigen::MatrixXd dx;  // n_x x n_x
    Eigen::MatrixXd du;  // n_x x n_u
  };
  /// Analytic Jacobians of predict through the diagonal transform Jacobians
  /// and the effective core; includes the hypernet chain term when Psi
  /// depends on x.
  Jacs jacobians(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  DynMap as_map() const;

 private:
  void sync_view();

  MonotoneTransform phi_;
  InputTransform psi_;
  SignedLinearCore core_;
  struct ViewHolder;
  std::shared_ptr<const ViewHolder> view_;  // rebuilt on parameter changes
};

/// Structural certificate per the exact-linearization sign theorems: the
/// effective core passes check_linear against `pat`, every transform weight
/// is bounded below by its eps, and the transforms fix zero. A pass certifies
/// the sign constraints globally, without sampling.
ConstraintReport verify_structural(const ELModel& m, const SignPattern& pat);

/// Plain fully connected baseline predicting x(t+1) from (x, u).
class MlpModel : public Model {
 public:
  enum class Activation { tanh, relu };

  MlpModel(int n_x, int n_u, std::vector<int> hidden, Activation act,
           std::uint64_t seed);

  int state_dim() const override { return n_x_; }
  int input_dim() const override { return n_u_; }
  int param_count() const override;
  Eigen::VectorXd params() const override;
  void set_params(const Eigen::VectorXd& theta) override;
  Eigen::VectorXd predict(const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u) const override;
  std::vector<ad::Expr> emit_predict(ad::Tape& tape, std::span<const ad::Expr> x,
                                     std::span<const ad::Expr> u) const override;
  std::unique_ptr<Model> clone() const override {
    return std::make_unique<MlpModel>(*this);
  }
  nlohmann::json to_json() const override;

  Activation activation() const { return act_; }

 private:
  friend MlpModel mlp_from_json(const nlohmann::json& j);
  MlpModel() = default;

  int n_x_ = 0, n_u_ = 0;
  std::vector<int> widths_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  Activation act_ = Activation::tanh;
};

std::unique_ptr<Model> model_from_json(const nlohmann::json& j);

}  // namespace sdyn
