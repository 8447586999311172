#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace sdyn {

enum class TimeKind { discrete, continuous };

/// Nonempty subset of {+1, -1, 0}, the admissible signs of one quantity.
class SignSet {
 public:
  SignSet() : bits_(0b111) {}  // {1,-1,0}
  static SignSet of(std::initializer_list<int> signs);
  static SignSet any() { return of({1, -1, 0}); }
  static SignSet nonneg() { return of({1, 0}); }
  static SignSet nonpos() { return of({-1, 0}); }
  static SignSet strictly(int s) { return of({s}); }
  static SignSet only_zero() { return of({0}); }

  bool contains(int sign) const;
  bool singleton() const;
  /// Only valid when singleton().
  int the_sign() const;
  int size() const;

  bool operator==(const SignSet& o) const { return bits_ == o.bits_; }
  bool operator!=(const SignSet& o) const { return bits_ != o.bits_; }

  std::string str() const;  // e.g. "{1,0}"
  std::vector<int> members() const;

 private:
  std::uint8_t bits_;  // bit0: 0, bit1: +1, bit2: -1
};

/// Sign sets for every Jacobian entry and for f(0,0). For continuous-time
/// patterns the diagonal of the state grid is exempt from all checks.
struct SignPattern {
  int n_x = 0;
  int n_u = 0;
  std::vector<SignSet> s_state;  // n_x*n_x, row-major
  std::vector<SignSet> s_input;  // n_x*n_u, row-major
  std::vector<SignSet> s_zero;   // n_x
  TimeKind time_kind = TimeKind::discrete;

  SignSet& state(int i, int j) { return s_state[i * n_x + j]; }
  const SignSet& state(int i, int j) const { return s_state[i * n_x + j]; }
  SignSet& input(int i, int j) { return s_input[i * n_u + j]; }
  const SignSet& input(int i, int j) const { return s_input[i * n_u + j]; }

  static SignPattern unconstrained(int n_x, int n_u,
                                   TimeKind kind = TimeKind::discrete);
  /// All state/input sets {1,0}; s_zero defaults to unconstrained.
  static SignPattern monotone(int n_x, int n_u,
                              TimeKind kind = TimeKind::discrete);
  SignPattern as_continuous() const;

  bool all_state_unconstrained() const;
};

struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd c;
  TimeKind time_kind = TimeKind::discrete;
};

/// Axis-aligned box; lo/hi entries may be +-infinity for sampling-free uses.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Eigen::VectorXd& v, double tol = 0.0) const;
  Eigen::VectorXd sample(std::mt19937_64& rng) const;
};

struct Violation {
  enum class Role { state, input, zero };
  Role role = Role::state;
  int i = 0;
  int j = 0;  // column index; for positivity violations the rollout step
  int observed = 0;
  SignSet allowed;
  double value = 0.0;  // the offending derivative / entry / state component
  Eigen::VectorXd witness_x;
  Eigen::VectorXd witness_u;
};

struct ConstraintReport {
  bool passed = true;
  std::vector<Violation> violations;
  std::uint64_t seed = 0;
  int n_samples = 0;
  double fd_step = 0.0;
  double tol = 0.0;

  nlohmann::json to_json() const;
  void add(Violation v, int max_recorded);
};

/// Sign with tolerance: 0 iff |value| <= tol. Non-finite input is a domain
/// error.
int sign_of(double value, double tol);

ConstraintReport check_linear(const LinearSystem& sys, const SignPattern& pattern,
                              double tol = 1e-7);

using DynMap =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct SampledCheckOptions {
  int n_samples = 10000;
  double fd_step = 1e-5;  // scaled per coordinate: h = fd_step * (1 + |coord|)
  double tol = 1e-7;
  std::uint64_t seed = 0;
  int max_recorded = 64;
};

/// Empirical falsifier: finite-difference Jacobian signs at uniform samples,
/// plus f(0,0) against s_zero when the boxes contain the origin.
ConstraintReport check_sampled(const DynMap& f, const SignPattern& pattern,
                               const Box& state_box, const Box& input_box,
                               const SampledCheckOptions& opts = {});

struct PositivityCheckOptions {
  int horizon = 200;
  int n_rollouts = 100;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  int hold_min = 5;  // piecewise-constant input hold lengths, in steps
  int hold_max = 20;
  int max_recorded = 64;
};

/// Rolls out a discrete step map from random nonnegative initial states under
/// random nonnegative piecewise-constant inputs; passes iff every visited
/// state stays >= -tol componentwise.
ConstraintReport check_positivity_empirical(const DynMap& f, const Box& state_box,
                                            const Box& input_box,
                                            const PositivityCheckOptions& opts = {});

/// f_c(x,u) = (f_d(x,u) - x) / dt.
DynMap discrete_to_continuous(DynMap f_d, double dt);

nlohmann::json pattern_to_json(const SignPattern& p);
SignPattern pattern_from_json(const nlohmann::json& j);

}  // namespace sdyn
