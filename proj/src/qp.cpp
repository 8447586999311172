#include "sdyn/qp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace sdyn {

void QPProblem::validate() const {
  if (P.rows() != P.cols()) throw std::invalid_argument("QP: P must be square");
  if (q.size() != n()) throw std::invalid_argument("QP: q size mismatch");
  if (A.cols() != n() && m() > 0) throw std::invalid_argument("QP: A cols mismatch");
  if (l.size() != m() || u.size() != m())
    throw std::invalid_argument("QP: bound sizes mismatch");
  for (int i = 0; i < m(); ++i)
    if (!(l[i] <= u[i])) throw std::invalid_argument("QP: l <= u violated");

  Eigen::MatrixXd pd = Eigen::MatrixXd(P);
  const double scale = std::max(1.0, pd.cwiseAbs().maxCoeff());
  if ((pd - pd.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("QP: P must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pd,
                                                     Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8)
    throw std::invalid_argument("QP: P must be positive semidefinite");
}

void QPProblem::dump(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f.precision(17);
  f << "# sparse QP dump: n m, then P/A triplets (i j v), then q/l/u values\n";
  f << n() << " " << m() << "\n";
  auto triplets = [&f](const Eigen::SparseMatrix<double>& mat, const char* name) {
    f << name << " " << mat.nonZeros() << "\n";
    for (int k = 0; k < mat.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(mat, k); it; ++it)
        f << it.row() << " " << it.col() << " " << it.value() << "\n";
  };
  triplets(P, "P");
  auto vec = [&f](const Eigen::VectorXd& v, const char* name) {
    f << name << " " << v.size() << "\n";
    for (int i = 0; i < v.size(); ++i) f << v[i] << "\n";
  };
  vec(q, "q");
  triplets(A, "A");
  vec(l, "l");
  vec(u, "u");
}

const char* to_string(QPStatus s) {
  switch (s) {
    case QPStatus::solved: return "solved";
    case QPStatus::max_iter: return "max_iter";
    default: return "primal_infeasible";
  }
}

AdmmSolver::AdmmSolver(QPProblem p, QPSettings s) : prob_(std::move(p)), st_(s) {
  prob_.validate();
  scale();
  build_rho();
  factorize();
}

void AdmmSolver::scale() {
  const int n = prob_.n(), m = prob_.m();
  d_scale_ = Eigen::VectorXd::Ones(n);
  e_scale_ = Eigen::VectorXd::Ones(m);
  cost_scale_ = 1.0;
  ps_ = prob_.P;
  as_ = prob_.A;
  qs_ = prob_.q;

  if (st_.scaling) {
    // Ruiz equilibration on the KKT block [P A'; A 0] plus cost scaling
    for (int it = 0; it < st_.scaling_iters; ++it) {
      Eigen::VectorXd col_norm = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < ps_.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator e(ps_, k); e; ++e) {
          col_norm[e.col()] = std::max(col_norm[e.col()], std::abs(e.value()));
          col_norm[e.row()] = std::max(col_norm[e.row()], std::abs(e.value()));
        }
      Eigen::VectorXd row_norm = Eigen::VectorXd::Zero(m);
      for (int k = 0; k < as_.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator e(as_, k); e; ++e) {
          col_norm[e.col()] = std::max(col_norm[e.col()], std::abs(e.value()));
          row_norm[e.row()] = std::max(row_norm[e.row()], std::abs(e.value()));
        }
      Eigen::VectorXd dd(n), ee(m);
      for (int i = 0; i < n; ++i)
        dd[i] = col_norm[i] > 1e-12 ? 1.0 / std::sqrt(col_norm[i]) : 1.0;
      for (int i = 0; i < m; ++i)
        ee[i] = row_norm[i] > 1e-12 ? 1.0 / std::sqrt(row_norm[i]) : 1.0;

      ps_ = dd.asDiagonal() * ps_ * dd.asDiagonal();
      as_ = ee.asDiagonal() * as_ * dd.asDiagonal();
      qs_ = dd.cwiseProduct(qs_);
      d_scale_ = d_scale_.cwiseProduct(dd);
      e_scale_ = e_scale_.cwiseProduct(ee);

      // cost scaling toward unit magnitude
      Eigen::VectorXd p_col = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < ps_.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator e(ps_, k); e; ++e)
          p_col[e.col()] = std::max(p_col[e.col()], std::abs(e.value()));
      double mean_p = n > 0 ? p_col.sum() / n : 0.0;
      double qn = qs_.size() > 0 ? qs_.cwiseAbs().maxCoeff() : 0.0;
      double denom = std::max(mean_p, qn);
      double g = denom > 1e-12 ? 1.0 / denom : 1.0;
      g = std::clamp(g, 1e-6, 1e6);
      ps_ *= g;
      qs_ *= g;
      cost_scale_ *= g;
    }
  }
  ls_.resize(m);
  us_.resize(m);
  for (int i = 0; i < m; ++i) {
    ls_[i] = std::isfinite(prob_.l[i]) ? e_scale_[i] * prob_.l[i] : prob_.l[i];
    us_[i] = std::isfinite(prob_.u[i]) ? e_scale_[i] * prob_.u[i] : prob_.u[i];
  }
}

void AdmmSolver::build_rho() {
  const int m = prob_.m();
  rho_.resize(m);
  eq_row_.resize(m);
  for (int i = 0; i < m; ++i) {
    eq_row_[i] = std::isfinite(prob_.l[i]) && std::isfinite(prob_.u[i]) &&
                 prob_.u[i] - prob_.l[i] < 1e-14;
    rho_[i] = eq_row_[i] ? st_.rho * 1e3 : st_.rho;
  }
}

void AdmmSolver::factorize() {
  const int n = prob_.n(), m = prob_.m();
  Eigen::SparseMatrix<double> kkt(n + m, n + m);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(ps_.nonZeros() + 2 * as_.nonZeros() + n + m);
  for (int k = 0; k < ps_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator e(ps_, k); e; ++e)
      trips.emplace_back(static_cast<int>(e.row()), static_cast<int>(e.col()),
                         e.value());
  for (int i = 0; i < n; ++i) trips.emplace_back(i, i, st_.sigma);
  for (int k = 0; k < as_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator e(as_, k); e; ++e) {
      trips.emplace_back(n + static_cast<int>(e.row()), static_cast<int>(e.col()),
                         e.value());
      trips.emplace_back(static_cast<int>(e.col()), n + static_cast<int>(e.row()),
                         e.value());
    }
  for (int i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, -1.0 / rho_[i]);
  kkt.setFromTriplets(trips.begin(), trips.end());
  kkt.makeCompressed();
  kkt_.compute(kkt);
  if (kkt_.info() != Eigen::Success)
    throw std::runtime_error("QP: KKT factorization failed");
}

void AdmmSolver::update_vectors(const Eigen::VectorXd* q, const Eigen::VectorXd* l,
                                const Eigen::VectorXd* u) {
  if (q) {
    if (q->size() != prob_.n()) throw std::invalid_argument("update: q size");
    prob_.q = *q;
    qs_ = cost_scale_ * d_scale_.cwiseProduct(prob_.q);
  }
  bool eq_changed = false;
  if (l) {
    if (l->size() != prob_.m()) throw std::invalid_argument("update: l size");
    prob_.l = *l;
  }
  if (u) {
    if (u->size() != prob_.m()) throw std::invalid_argument("update: u size");
    prob_.u = *u;
  }
  if (l || u) {
    for (int i = 0; i < prob_.m(); ++i) {
      if (!(prob_.l[i] <= prob_.u[i]))
        throw std::invalid_argument("update: l <= u violated");
      ls_[i] = std::isfinite(prob_.l[i]) ? e_scale_[i] * prob_.l[i] : prob_.l[i];
      us_[i] = std::isfinite(prob_.u[i]) ? e_scale_[i] * prob_.u[i] : prob_.u[i];
      const bool eq = std::isfinite(prob_.l[i]) && std::isfinite(prob_.u[i]) &&
                      prob_.u[i] - prob_.l[i] < 1e-14;
      if (eq != eq_row_[i]) eq_changed = true;
    }
    if (eq_changed) {
      build_rho();
      factorize();
    }
  }
}

QPSolution AdmmSolver::solve(const QPSolution* warm) {
  const int n = prob_.n(), m = prob_.m();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  if (warm && warm->z.size() == n && warm->y.size() == m) {
    x = d_scale_.cwiseInverse().cwiseProduct(warm->z);
    y = cost_scale_ * e_scale_.cwiseInverse().cwiseProduct(warm->y);
  }
  Eigen::VectorXd z = as_ * x;
  for (int i = 0; i < m; ++i) z[i] = std::clamp(z[i], ls_[i], us_[i]);

  Eigen::VectorXd rhs(n + m), sol(n + m), xt(n), zt(m), z_prev(m);
  Eigen::VectorXd y_prev_check = y;

  QPSolution best;
  best.z = d_scale_.cwiseProduct(x);
  best.y = e_scale_.cwiseProduct(y) / cost_scale_;

  auto residuals = [&](const Eigen::VectorXd& zu, const Eigen::VectorXd& yu,
                       double& rp, double& rd) {
    rp = 0.0;
    if (m > 0) {
      Eigen::VectorXd az = prob_.A * zu;
      for (int i = 0; i < m; ++i) {
        double d = 0.0;
        if (az[i] > prob_.u[i]) d = az[i] - prob_.u[i];
        else if (az[i] < prob_.l[i]) d = prob_.l[i] - az[i];
        rp = std::max(rp, d);
      }
    }
    Eigen::VectorXd dual = prob_.P * zu + prob_.q;
    if (m > 0) dual += prob_.A.transpose() * yu;
    rd = dual.size() > 0 ? dual.cwiseAbs().maxCoeff() : 0.0;
  };

  int it = 0;
  for (it = 1; it <= st_.max_iter; ++it) {
    rhs.head(n) = st_.sigma * x - qs_;
    rhs.tail(m) = z - y.cwiseQuotient(rho_);
    sol = kkt_.solve(rhs);
    xt = sol.head(n);
    Eigen::VectorXd nu = sol.tail(m);
    zt = z + (nu - y).cwiseQuotient(rho_);

    x = st_.alpha * xt + (1.0 - st_.alpha) * x;
    z_prev = z;
    Eigen::VectorXd z_arg =
        st_.alpha * zt + (1.0 - st_.alpha) * z_prev + y.cwiseQuotient(rho_);
    for (int i = 0; i < m; ++i) z[i] = std::clamp(z_arg[i], ls_[i], us_[i]);
    y = y + rho_.cwiseProduct(st_.alpha * zt + (1.0 - st_.alpha) * z_prev - z);

    if (it % st_.check_interval == 0 || it == st_.max_iter) {
      Eigen::VectorXd zu = d_scale_.cwiseProduct(x);
      Eigen::VectorXd yu = e_scale_.cwiseProduct(y) / cost_scale_;
      double rp, rd;
      residuals(zu, yu, rp, rd);
      best.z = zu;
      best.y = yu;
      best.res_prim = rp;
      best.res_dual = rd;
      best.iterations = it;
      if (rp <= st_.tol_prim && rd <= st_.tol_dual) {
        best.status = QPStatus::solved;
        break;
      }

      // primal infeasibility certificate on the dual increment
      Eigen::VectorXd dy = yu - y_prev_check;
      y_prev_check = yu;
      const double dy_norm = m > 0 ? dy.cwiseAbs().maxCoeff() : 0.0;
      if (dy_norm > 1e-12) {
        bool candidate =
            (prob_.A.transpose() * dy).cwiseAbs().maxCoeff() <=
            st_.eps_infeasible * dy_norm;
        if (candidate) {
          double support = 0.0;
          for (int i = 0; i < m && candidate; ++i) {
            const double thresh = st_.eps_infeasible * dy_norm;
            if (dy[i] > thresh) {
              if (!std::isfinite(prob_.u[i])) candidate = false;
              else support += prob_.u[i] * dy[i];
            } else if (dy[i] < -thresh) {
              if (!std::isfinite(prob_.l[i])) candidate = false;
              else support += prob_.l[i] * dy[i];
            }
          }
          if (candidate && support <= -st_.eps_infeasible * dy_norm) {
            best.status = QPStatus::primal_infeasible;
            best.iterations = it;
            return best;
          }
        }
      }
    }
  }
  if (best.status != QPStatus::solved) {
    best.status = QPStatus::max_iter;
    best.iterations = std::min(it, st_.max_iter);
  }

  if (st_.polish) polish(best);
  return best;
}

void AdmmSolver::polish(QPSolution& sol) const {
  const int n = prob_.n(), m = prob_.m();
  std::vector<int> active;
  std::vector<int> side;  // -1 lower, +1 upper, 0 equality
  Eigen::VectorXd az = m > 0 ? Eigen::VectorXd(prob_.A * sol.z) : Eigen::VectorXd();
  for (int i = 0; i < m; ++i) {
    const double span_tol = 1e-9 * (1.0 + std::abs(az[i]));
    if (eq_row_[i]) {
      active.push_back(i);
      side.push_back(0);
    } else if (sol.y[i] < -1e-10 ||
               (std::isfinite(prob_.l[i]) && az[i] - prob_.l[i] < span_tol)) {
      active.push_back(i);
      side.push_back(-1);
    } else if (sol.y[i] > 1e-10 ||
               (std::isfinite(prob_.u[i]) && prob_.u[i] - az[i] < span_tol)) {
      active.push_back(i);
      side.push_back(1);
    }
  }
  const int k = static_cast<int>(active.size());

  Eigen::MatrixXd kk(n + k, n + k);
  kk.setZero();
  kk.topLeftCorner(n, n) = Eigen::MatrixXd(prob_.P);
  Eigen::MatrixXd act(k, n);
  Eigen::VectorXd b(k);
  for (int r = 0; r < k; ++r) {
    act.row(r) = Eigen::RowVectorXd(prob_.A.row(active[r]));
    b[r] = side[r] <= 0 ? prob_.l[active[r]] : prob_.u[active[r]];
  }
  kk.block(n, 0, k, n) = act;
  kk.block(0, n, n, k) = act.transpose();
  // light regularization keeps degenerate active sets solvable
  for (int i = 0; i < n; ++i) kk(i, i) += 1e-12;
  for (int i = 0; i < k; ++i) kk(n + i, n + i) -= 1e-12;

  Eigen::VectorXd rhs(n + k);
  rhs.head(n) = -prob_.q;
  rhs.tail(k) = b;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kk);
  if (!lu.isInvertible()) return;
  Eigen::VectorXd s = lu.solve(rhs);

  QPSolution cand = sol;
  cand.z = s.head(n);
  cand.y = Eigen::VectorXd::Zero(m);
  for (int r = 0; r < k; ++r) cand.y[active[r]] = s[n + r];

  // dual signs must match the active side
  for (int r = 0; r < k; ++r) {
    if (side[r] < 0 && cand.y[active[r]] > 1e-9) return;
    if (side[r] > 0 && cand.y[active[r]] < -1e-9) return;
  }

  double rp = 0.0, rd = 0.0;
  if (m > 0) {
    Eigen::VectorXd azc = prob_.A * cand.z;
    for (int i = 0; i < m; ++i) {
      double d = 0.0;
      if (azc[i] > prob_.u[i]) d = azc[i] - prob_.u[i];
      else if (azc[i] < prob_.l[i]) d = prob_.l[i] - azc[i];
      rp = std::max(rp, d);
    }
  }
  Eigen::VectorXd dual = prob_.P * cand.z + prob_.q;
  if (m > 0) dual += prob_.A.transpose() * cand.y;
  rd = dual.size() > 0 ? dual.cwiseAbs().maxCoeff() : 0.0;

  if (rp <= std::max(sol.res_prim, st_.tol_prim) &&
      rd <= std::max(sol.res_dual, st_.tol_dual)) {
    cand.res_prim = rp;
    cand.res_dual = rd;
    cand.iterations = sol.iterations;
    cand.status = (rp <= st_.tol_prim && rd <= st_.tol_dual) ? QPStatus::solved
                                                             : sol.status;
    sol = cand;
  }
}

QPSolution solve_qp(const QPProblem& p, const QPSettings& s, const QPSolution* warm) {
  AdmmSolver solver(p, s);
  return solver.solve(warm);
}

}  // namespace sdyn
