#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sdyn/model.hpp"
#include "sdyn/qp.hpp"

namespace sdyn {

/// Per-component reference/bound values over absolute time; either one
/// constant row or a schedule clamped at its last row.
class Timeline {
 public:
  Timeline() = default;
  static Timeline constant(const Eigen::VectorXd& row);
  static Timeline schedule(const Eigen::MatrixXd& rows);

  bool empty() const { return rows_.size() == 0; }
  int dim() const { return static_cast<int>(rows_.cols()); }
  /// Row at time t, clamped to the schedule; throws when empty.
  Eigen::VectorXd at(int t) const;
  bool ever_finite(int comp) const;
  const Eigen::MatrixXd& data() const { return rows_; }

 private:
  Eigen::MatrixXd rows_;
};

struct MpcWeights {
  Eigen::VectorXd req;   // n_x, tracking
  Eigen::VectorXd u;     // n_u, effort on the transformed inputs v
  Eigen::VectorXd soft;  // n_x, soft-bound slack
};

struct MpcSpec {
  int horizon = 10;
  MpcWeights weights;
  std::vector<bool> state_nonneg;  // 0 <= x_i rows (exact through Phi)
  std::vector<bool> input_nonneg;  // 0 <= u_j rows (exact through Psi)
  /// With state-dependent Psi the hard input-bound rows are exact only at
  /// t = 0; this opt-in additionally emits approximate rows for t >= 1 using
  /// Psi(.; x0).
  bool map_input_bounds_beyond_t0 = false;

  Timeline x_req;                  // n_x
  Timeline x_lo, x_hi;             // n_x hard bounds
  Timeline u_lo, u_hi;             // n_u hard bounds
  Timeline x_soft_hi, x_soft_lo;   // n_x soft bounds (slack-penalized)

  void validate(int n_x, int n_u) const;
};

nlohmann::json mpc_spec_to_json(const MpcSpec& s);
MpcSpec mpc_spec_from_json(const nlohmann::json& j);

/// The condensed convex QP over stacked (xi(1..N), v(0..N-1), gamma(0..N-1))
/// with dynamics as equality rows, plus decoders back to (x, u) trajectories.
class TransformedQP {
 public:
  TransformedQP(const ELModel& m, const MpcSpec& spec);

  /// Rebuild (q, l, u) for the given initial state and absolute time.
  void refresh(const ELModel& m, const MpcSpec& spec, const Eigen::VectorXd& x0,
               int t_abs);

  const QPProblem& problem() const { return qp_; }
  int n_vars() const { return n_vars_; }
  int horizon() const { return horizon_; }
  const std::vector<int>& soft_comps() const { return soft_comps_; }

  int xi_index(int t, int i) const;  // t in [1, N]
  int v_index(int t, int j) const;   // t in [0, N-1]
  int gamma_index(int t, int k) const;

  struct Decoded {
    Eigen::MatrixXd states;  // (N+1) x n_x, row 0 = x0
    Eigen::MatrixXd inputs;  // N x n_u
  };
  Decoded decode(const ELModel& m, const Eigen::VectorXd& x0,
                 const Eigen::VectorXd& z) const;

 private:
  struct Row {
    enum class Kind { dynamics, state_bound, input_bound, slack_nonneg, soft_hi, soft_lo };
    Kind kind;
    int t = 0;
    int comp = 0;  // state/input component, or soft-slot index
  };

  int horizon_ = 0, n_x_ = 0, n_u_ = 0, n_soft_ = 0, n_vars_ = 0;
  std::vector<int> soft_comps_;
  std::vector<Row> rows_;
  std::vector<bool> input_bound_rows_all_t_;  // per input comp
  QPProblem qp_;
};

struct StepDiagnostics {
  QPStatus status = QPStatus::max_iter;
  double res_prim = 0.0;
  double res_dual = 0.0;
  int iterations = 0;
  double qp_objective = 0.0;  // transformed (xi-space) cost
  double x_cost = 0.0;        // original-space cost of the decoded trajectory
};

struct ControlResult {
  Eigen::VectorXd u0;
  StepDiagnostics diag;
  Eigen::MatrixXd pred_states;  // (N+1) x n_x
  Eigen::MatrixXd pred_inputs;  // N x n_u
};

/// Receding-horizon controller: owns the solver workspace, reuses the cached
/// KKT factorization across steps, and warm-starts from the last solution.
class MpcController {
 public:
  MpcController(ELModel model, MpcSpec spec, QPSettings qp_settings = {});

  ControlResult control(const Eigen::VectorXd& x, int t_abs = 0);
  void reset_warm_start() { has_prev_ = false; }

  const ELModel& model() const { return model_; }
  const MpcSpec& spec() const { return spec_; }

 private:
  ELModel model_;
  MpcSpec spec_;
  TransformedQP tqp_;
  std::unique_ptr<AdmmSolver> solver_;
  QPSolution prev_;
  bool has_prev_ = false;
};

struct ClosedLoopLog {
  Eigen::MatrixXd states;  // (steps+1) x n_x (truncated on failure)
  Eigen::MatrixXd inputs;  // steps x n_u
  std::vector<StepDiagnostics> diags;
  bool completed = true;
  std::string error;

  void to_csv(const std::string& path) const;
};

/// Alternates control and plant steps, logging states, inputs, and solver
/// diagnostics; a plant or decoder failure terminates with a partial log.
ClosedLoopLog closed_loop(const DynMap& plant, MpcController& controller,
                          const Eigen::VectorXd& x_init, int steps);

}  // namespace sdyn
