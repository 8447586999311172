#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <limits>
#include <string>

namespace sdyn {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min 1/2 z'Pz + q'z  s.t.  l <= Az <= u  (equality rows encoded as l = u).
struct QPProblem {
  Eigen::SparseMatrix<double> P;  // n x n, symmetric positive semidefinite
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> A;  // m x n
  Eigen::VectorXd l, u;

  int n() const { return static_cast<int>(P.rows()); }
  int m() const { return static_cast<int>(A.rows()); }
  /// Checks symmetry, a smallest-eigenvalue probe >= -1e-8, and l <= u.
  void validate() const;

  /// Plain-text sparse triplet dump for offline inspection.
  void dump(const std::string& path) const;
};

enum class QPStatus { solved, max_iter, primal_infeasible };

const char* to_string(QPStatus s);

struct QPSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd y;
  QPStatus status = QPStatus::max_iter;
  double res_prim = kInf;
  double res_dual = kInf;
  int iterations = 0;
};

struct QPSettings {
  double tol_prim = 1e-8;
  double tol_dual = 1e-8;
  int max_iter = 50000;
  double rho = 1.0;        // fixed penalty; equality rows get rho * 1e3
  double sigma = 1e-6;
  double alpha = 1.6;      // over-relaxation
  bool scaling = true;     // Ruiz equilibration
  int scaling_iters = 10;
  bool polish = true;      // active-set refinement of the accepted iterate
  int check_interval = 25;
  double eps_infeasible = 1e-9;
};

/// Operator-splitting solver with a cached sparse quasi-definite KKT
/// factorization; updating only (q, l, u) reuses the factorization, which is
/// the MPC resolve pattern.
class AdmmSolver {
 public:
  explicit AdmmSolver(QPProblem p, QPSettings s = {});

  /// Replace cost/bound vectors without refactorizing (pass nullptr to keep).
  void update_vectors(const Eigen::VectorXd* q, const Eigen::VectorXd* l,
                      const Eigen::VectorXd* u);

  QPSolution solve(const QPSolution* warm = nullptr);

  const QPProblem& problem() const { return prob_; }
  const QPSettings& settings() const { return st_; }

 private:
  void scale();
  void build_rho();
  void factorize();
  void polish(QPSolution& sol) const;

  QPProblem prob_;
  QPSettings st_;
  Eigen::VectorXd d_scale_, e_scale_;
  double cost_scale_ = 1.0;
  Eigen::SparseMatrix<double> ps_, as_;  // scaled P, A
  Eigen::VectorXd qs_, ls_, us_;
  Eigen::VectorXd rho_;                  // per-row penalty (scaled space)
  Eigen::Array<bool, Eigen::Dynamic, 1> eq_row_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> kkt_;
};

QPSolution solve_qp(const QPProblem& p, const QPSettings& s = {},
                    const QPSolution* warm = nullptr);

}  // namespace sdyn
