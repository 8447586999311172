#include "sdyn/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sdyn {

Timeline Timeline::constant(const Eigen::VectorXd& row) {
  Timeline t;
  t.rows_ = row.transpose();
  return t;
}

Timeline Timeline::schedule(const Eigen::MatrixXd& rows) {
  Timeline t;
  t.rows_ = rows;
  return t;
}

Eigen::VectorXd Timeline::at(int t) const {
  if (empty()) throw std::logic_error("Timeline::at on empty timeline");
  const int r = std::clamp<int>(t, 0, static_cast<int>(rows_.rows()) - 1);
  return rows_.row(r).transpose();
}

bool Timeline::ever_finite(int comp) const {
  if (empty()) return false;
  for (int r = 0; r < rows_.rows(); ++r)
    if (std::isfinite(rows_(r, comp))) return true;
  return false;
}

namespace {

double weight_at(const Eigen::VectorXd& w, int i) {
  return w.size() == 0 ? 0.0 : w[i];
}

Eigen::VectorXd timeline_row(const Timeline& tl, int t, int dim, double fallback) {
  if (tl.empty()) return Eigen::VectorXd::Constant(dim, fallback);
  return tl.at(t);
}

/// Componentwise monotone map of a bound vector: non-finite entries pass
/// through untouched (the transforms are diagonal, so a placeholder in one
/// component cannot leak into another).
Eigen::VectorXd map_bound_through(const MonotoneTransform& t,
                                  const Eigen::VectorXd& bound) {
  Eigen::VectorXd masked = bound;
  for (int i = 0; i < masked.size(); ++i)
    if (!std::isfinite(masked[i])) masked[i] = 0.0;
  Eigen::VectorXd mapped = t.forward(masked);
  for (int i = 0; i < bound.size(); ++i)
    if (!std::isfinite(bound[i])) mapped[i] = bound[i];
  return mapped;
}

Eigen::VectorXd map_input_bound(const InputTransform& psi,
                                const Eigen::VectorXd& bound,
                                const Eigen::VectorXd& x_cond) {
  Eigen::VectorXd masked = bound;
  for (int i = 0; i < masked.size(); ++i)
    if (!std::isfinite(masked[i])) masked[i] = 0.0;
  Eigen::VectorXd mapped = psi.eval(masked, x_cond);
  for (int i = 0; i < bound.size(); ++i)
    if (!std::isfinite(bound[i])) mapped[i] = bound[i];
  return mapped;
}

}  // namespace

void MpcSpec::validate(int n_x, int n_u) const {
  if (horizon < 1) throw std::invalid_argument("MpcSpec: horizon must be >= 1");
  auto check_len = [](const Eigen::VectorXd& v, int n, const char* name) {
    if (v.size() != 0 && v.size() != n)
      throw std::invalid_argument(std::string("MpcSpec: bad length for ") + name);
  };
  check_len(weights.req, n_x, "weights.req");
  check_len(weights.u, n_u, "weights.u");
  check_len(weights.soft, n_x, "weights.soft");
  if (!state_nonneg.empty() && static_cast<int>(state_nonneg.size()) != n_x)
    throw std::invalid_argument("MpcSpec: state_nonneg length");
  if (!input_nonneg.empty() && static_cast<int>(input_nonneg.size()) != n_u)
    throw std::invalid_argument("MpcSpec: input_nonneg length");
  auto check_tl = [](const Timeline& tl, int n, const char* name) {
    if (!tl.empty() && tl.dim() != n)
      throw std::invalid_argument(std::string("MpcSpec: bad timeline dim for ") + name);
  };
  check_tl(x_req, n_x, "x_req");
  check_tl(x_lo, n_x, "x_lo");
  check_tl(x_hi, n_x, "x_hi");
  check_tl(u_lo, n_u, "u_lo");
  check_tl(u_hi, n_u, "u_hi");
  check_tl(x_soft_hi, n_x, "x_soft_hi");
  check_tl(x_soft_lo, n_x, "x_soft_lo");
  for (int t = 0; t < horizon; ++t) {
    if (!x_lo.empty() && !x_hi.empty())
      for (int i = 0; i < n_x; ++i)
        if (x_lo.at(t)[i] > x_hi.at(t)[i])
          throw std::invalid_argument("MpcSpec: x_lo > x_hi");
    if (!u_lo.empty() && !u_hi.empty())
      for (int j = 0; j < n_u; ++j)
        if (u_lo.at(t)[j] > u_hi.at(t)[j])
          throw std::invalid_argument("MpcSpec: u_lo > u_hi");
  }
}

TransformedQP::TransformedQP(const ELModel& m, const MpcSpec& spec) {
  const int n_x = m.state_dim(), n_u = m.input_dim(), N = spec.horizon;
  spec.validate(n_x, n_u);
  if (!verify_structural(m, m.pattern()).passed)
    throw std::invalid_argument(
        "mpc: model fails the structural monotonicity/zero-fixing check");

  bool any_weight = false;
  for (int i = 0; i < n_x; ++i)
    any_weight |= weight_at(spec.weights.req, i) > 0.0 ||
                  weight_at(spec.weights.soft, i) > 0.0;
  for (int j = 0; j < n_u; ++j) any_weight |= weight_at(spec.weights.u, j) > 0.0;
  if (!any_weight)
    throw std::invalid_argument("mpc: all weights zero, objective unbounded-flat");

  horizon_ = N;
  n_x_ = n_x;
  n_u_ = n_u;

  for (int i = 0; i < n_x; ++i)
    if (weight_at(spec.weights.soft, i) > 0.0 &&
        (spec.x_soft_hi.ever_finite(i) || spec.x_soft_lo.ever_finite(i)))
      soft_comps_.push_back(i);
  n_soft_ = static_cast<int>(soft_comps_.size());
  n_vars_ = N * n_x + N * n_u + N * n_soft_;

  const bool x_dep = m.psi().state_dependent();
  std::vector<bool> state_row(n_x, false);
  for (int i = 0; i < n_x; ++i)
    state_row[i] = (!spec.state_nonneg.empty() && spec.state_nonneg[i]) ||
                   spec.x_lo.ever_finite(i) || spec.x_hi.ever_finite(i);

  std::vector<bool> input_mask(n_u, false), input_has_bounds(n_u, false);
  input_bound_rows_all_t_.assign(n_u, false);
  for (int j = 0; j < n_u; ++j) {
    input_mask[j] = !spec.input_nonneg.empty() && spec.input_nonneg[j];
    input_has_bounds[j] = spec.u_lo.ever_finite(j) || spec.u_hi.ever_finite(j);
    input_bound_rows_all_t_[j] =
        input_has_bounds[j] && (!x_dep || spec.map_input_bounds_beyond_t0);
  }

  // fixed row order: dynamics, state bounds, input bounds, slack >= 0, soft
  for (int t = 0; t < N; ++t)
    for (int i = 0; i < n_x; ++i) rows_.push_back({Row::Kind::dynamics, t, i});
  for (int t = 1; t < N; ++t)
    for (int i = 0; i < n_x; ++i)
      if (state_row[i]) rows_.push_back({Row::Kind::state_bound, t, i});
  for (int t = 0; t < N; ++t)
    for (int j = 0; j < n_u; ++j) {
      const bool present = input_mask[j] || input_bound_rows_all_t_[j] ||
                           (t == 0 && input_has_bounds[j]);
      if (present) rows_.push_back({Row::Kind::input_bound, t, j});
    }
  for (int t = 0; t < N; ++t)
    for (int k = 0; k < n_soft_; ++k)
      rows_.push_back({Row::Kind::slack_nonneg, t, k});
  for (int t = 0; t < N; ++t)
    for (int k = 0; k < n_soft_; ++k) {
      if (spec.x_soft_hi.ever_finite(soft_comps_[k]))
        rows_.push_back({Row::Kind::soft_hi, t, k});
      if (spec.x_soft_lo.ever_finite(soft_comps_[k]))
        rows_.push_back({Row::Kind::soft_lo, t, k});
    }

  const int m_rows = static_cast<int>(rows_.size());
  const LinearSystem core = m.core().effective();

  std::vector<Eigen::Triplet<double>> at;
  for (int r = 0; r < m_rows; ++r) {
    const Row& row = rows_[r];
    switch (row.kind) {
      case Row::Kind::dynamics: {
        at.emplace_back(r, xi_index(row.t + 1, row.comp), 1.0);
        if (row.t >= 1)
          for (int j = 0; j < n_x; ++j)
            if (core.A(row.comp, j) != 0.0)
              at.emplace_back(r, xi_index(row.t, j), -core.A(row.comp, j));
        for (int j = 0; j < n_u; ++j)
          if (core.B(row.comp, j) != 0.0)
            at.emplace_back(r, v_index(row.t, j), -core.B(row.comp, j));
        break;
      }
      case Row::Kind::state_bound:
        at.emplace_back(r, xi_index(row.t, row.comp), 1.0);
        break;
      case Row::Kind::input_bound:
        at.emplace_back(r, v_index(row.t, row.comp), 1.0);
        break;
      case Row::Kind::slack_nonneg:
        at.emplace_back(r, gamma_index(row.t, row.comp), 1.0);
        break;
      case Row::Kind::soft_hi:
        if (row.t >= 1) at.emplace_back(r, xi_index(row.t, soft_comps_[row.comp]), 1.0);
        at.emplace_back(r, gamma_index(row.t, row.comp), -1.0);
        break;
      case Row::Kind::soft_lo:
        if (row.t >= 1) at.emplace_back(r, xi_index(row.t, soft_comps_[row.comp]), 1.0);
        at.emplace_back(r, gamma_index(row.t, row.comp), 1.0);
        break;
    }
  }

  std::vector<Eigen::Triplet<double>> pt;
  for (int t = 1; t < N; ++t)
    for (int i = 0; i < n_x; ++i) {
      const double w = weight_at(spec.weights.req, i);
      if (w > 0.0) pt.emplace_back(xi_index(t, i), xi_index(t, i), 2.0 * w);
    }
  for (int t = 0; t < N; ++t)
    for (int j = 0; j < n_u; ++j) {
      const double w = weight_at(spec.weights.u, j);
      if (w > 0.0) pt.emplace_back(v_index(t, j), v_index(t, j), 2.0 * w);
    }
  for (int t = 0; t < N; ++t)
    for (int k = 0; k < n_soft_; ++k) {
      const double w = weight_at(spec.weights.soft, soft_comps_[k]);
      pt.emplace_back(gamma_index(t, k), gamma_index(t, k), 2.0 * w);
    }

  qp_.P.resize(n_vars_, n_vars_);
  qp_.P.setFromTriplets(pt.begin(), pt.end());
  qp_.A.resize(m_rows, n_vars_);
  qp_.A.setFromTriplets(at.begin(), at.end());
  qp_.q = Eigen::VectorXd::Zero(n_vars_);
  qp_.l = Eigen::VectorXd::Constant(m_rows, -kInf);
  qp_.u = Eigen::VectorXd::Constant(m_rows, kInf);
  refresh(m, spec, Eigen::VectorXd::Zero(n_x), 0);
}

int TransformedQP::xi_index(int t, int i) const { return (t - 1) * n_x_ + i; }
int TransformedQP::v_index(int t, int j) const {
  return horizon_ * n_x_ + t * n_u_ + j;
}
int TransformedQP::gamma_index(int t, int k) const {
  return horizon_ * (n_x_ + n_u_) + t * n_soft_ + k;
}

void TransformedQP::refresh(const ELModel& m, const MpcSpec& spec,
                            const Eigen::VectorXd& x0, int t_abs) {
  const int N = horizon_;
  const LinearSystem core = m.core().effective();
  const Eigen::VectorXd xi0 = m.phi().forward(x0);
  const Eigen::VectorXd a_xi0 = core.A * xi0;

  qp_.q.setZero();
  for (int t = 1; t < N; ++t) {
    const Eigen::VectorXd ref = timeline_row(spec.x_req, t_abs + t, n_x_, 0.0);
    const Eigen::VectorXd xi_ref = map_bound_through(m.phi(), ref);
    for (int i = 0; i < n_x_; ++i) {
      const double w = weight_at(spec.weights.req, i);
      if (w > 0.0) qp_.q[xi_index(t, i)] = -2.0 * w * xi_ref[i];
    }
  }

  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const Row& row = rows_[r];
    double lo = -kInf, hi = kInf;
    switch (row.kind) {
      case Row::Kind::dynamics: {
        const double rhs = core.c[row.comp] + (row.t == 0 ? a_xi0[row.comp] : 0.0);
        lo = hi = rhs;
        break;
      }
      case Row::Kind::state_bound: {
        const Eigen::VectorXd blo = map_bound_through(
            m.phi(), timeline_row(spec.x_lo, t_abs + row.t, n_x_, -kInf));
        const Eigen::VectorXd bhi = map_bound_through(
            m.phi(), timeline_row(spec.x_hi, t_abs + row.t, n_x_, kInf));
        lo = blo[row.comp];
        hi = bhi[row.comp];
        if (!spec.state_nonneg.empty() && spec.state_nonneg[row.comp])
          lo = std::max(lo, 0.0);
        break;
      }
      case Row::Kind::input_bound: {
        const int j = row.comp;
        if (!spec.input_nonneg.empty() && spec.input_nonneg[j]) lo = 0.0;
        const bool bounds_here = row.t == 0 || input_bound_rows_all_t_[j];
        if (bounds_here) {
          const Eigen::VectorXd ulo =
              timeline_row(spec.u_lo, t_abs + row.t, n_u_, -kInf);
          const Eigen::VectorXd uhi =
              timeline_row(spec.u_hi, t_abs + row.t, n_u_, kInf);
          const Eigen::VectorXd vlo = map_input_bound(m.psi(), ulo, x0);
          const Eigen::VectorXd vhi = map_input_bound(m.psi(), uhi, x0);
          if (std::isfinite(vlo[j])) lo = std::max(lo, vlo[j]);
          if (std::isfinite(vhi[j])) hi = vhi[j];
        }
        break;
      }
      case Row::Kind::slack_nonneg:
        lo = 0.0;
        break;
      case Row::Kind::soft_hi: {
        const int i = soft_comps_[row.comp];
        const Eigen::VectorXd b = map_bound_through(
            m.phi(), timeline_row(spec.x_soft_hi, t_abs + row.t, n_x_, kInf));
        if (std::isfinite(b[i])) hi = b[i] - (row.t == 0 ? xi0[i] : 0.0);
        break;
      }
      case Row::Kind::soft_lo: {
        const int i = soft_comps_[row.comp];
        const Eigen::VectorXd b = map_bound_through(
            m.phi(), timeline_row(spec.x_soft_lo, t_abs + row.t, n_x_, -kInf));
        if (std::isfinite(b[i])) lo = b[i] - (row.t == 0 ? xi0[i] : 0.0);
        break;
      }
    }
    qp_.l[static_cast<int>(r)] = lo;
    qp_.u[static_cast<int>(r)] = hi;
  }
}

TransformedQP::Decoded TransformedQP::decode(const ELModel& m,
                                             const Eigen::VectorXd& x0,
                                             const Eigen::VectorXd& z) const {
  Decoded d;
  d.states.resize(horizon_ + 1, n_x_);
  d.inputs.resize(horizon_, n_u_);
  d.states.row(0) = x0.transpose();
  for (int t = 1; t <= horizon_; ++t) {
    Eigen::VectorXd xi(n_x_);
    for (int i = 0; i < n_x_; ++i) xi[i] = z[xi_index(t, i)];
    d.states.row(t) = m.phi().inverse(xi).transpose();
  }
  for (int t = 0; t < horizon_; ++t) {
    Eigen::VectorXd v(n_u_);
    for (int j = 0; j < n_u_; ++j) v[j] = z[v_index(t, j)];
    d.inputs.row(t) =
        m.psi().inverse(v, d.states.row(t).transpose()).transpose();
  }
  return d;
}

MpcController::MpcController(ELModel model, MpcSpec spec, QPSettings qp_settings)
    : model_(std::move(model)), spec_(std::move(spec)), tqp_(model_, spec_) {
  solver_ = std::make_unique<AdmmSolver>(tqp_.problem(), qp_settings);
}

namespace {

double original_cost(const MpcSpec& spec, const TransformedQP::Decoded& d,
                     int t_abs) {
  const int N = static_cast<int>(d.inputs.rows());
  const int n_x = static_cast<int>(d.states.cols());
  const int n_u = static_cast<int>(d.inputs.cols());
  double cost = 0.0;
  for (int t = 0; t < N; ++t) {
    const Eigen::VectorXd ref = timeline_row(spec.x_req, t_abs + t, n_x, 0.0);
    const Eigen::VectorXd shi = timeline_row(spec.x_soft_hi, t_abs + t, n_x, kInf);
    const Eigen::VectorXd slo = timeline_row(spec.x_soft_lo, t_abs + t, n_x, -kInf);
    for (int i = 0; i < n_x; ++i) {
      const double wr = weight_at(spec.weights.req, i);
      if (wr > 0.0) cost += wr * sqr(d.states(t, i) - ref[i]);
      const double ws = weight_at(spec.weights.soft, i);
      if (ws > 0.0) {
        if (std::isfinite(shi[i]))
          cost += ws * sqr(std::max(d.states(t, i) - shi[i], 0.0));
        if (std::isfinite(slo[i]))
          cost += ws * sqr(std::max(slo[i] - d.states(t, i), 0.0));
      }
    }
    for (int j = 0; j < n_u; ++j)
      cost += weight_at(spec.weights.u, j) * sqr(d.inputs(t, j));
  }
  return cost;
}

}  // namespace

ControlResult MpcController::control(const Eigen::VectorXd& x, int t_abs) {
  tqp_.refresh(model_, spec_, x, t_abs);
  solver_->update_vectors(&tqp_.problem().q, &tqp_.problem().l, &tqp_.problem().u);
  QPSolution sol = solver_->solve(has_prev_ ? &prev_ : nullptr);
  prev_ = sol;
  has_prev_ = true;

  ControlResult res;
  auto decoded = tqp_.decode(model_, x, sol.z);
  Eigen::VectorXd v0(model_.input_dim());
  for (int j = 0; j < model_.input_dim(); ++j) v0[j] = sol.z[tqp_.v_index(0, j)];
  res.u0 = model_.psi().inverse(v0, x);
  res.pred_states = decoded.states;
  res.pred_inputs = decoded.inputs;
  res.diag.status = sol.status;
  res.diag.res_prim = sol.res_prim;
  res.diag.res_dual = sol.res_dual;
  res.diag.iterations = sol.iterations;
  res.diag.qp_objective =
      0.5 * sol.z.dot(tqp_.problem().P * sol.z) + tqp_.problem().q.dot(sol.z);
  res.diag.x_cost = original_cost(spec_, decoded, t_abs);
  return res;
}

ClosedLoopLog closed_loop(const DynMap& plant, MpcController& controller,
                          const Eigen::VectorXd& x_init, int steps) {
  const int n_x = static_cast<int>(x_init.size());
  ClosedLoopLog log;
  log.states.resize(steps + 1, n_x);
  log.states.row(0) = x_init.transpose();
  Eigen::VectorXd x = x_init;
  int done = 0;
  try {
    for (int t = 0; t < steps; ++t) {
      ControlResult res = controller.control(x, t);
      if (log.inputs.size() == 0)
        log.inputs.resize(steps, res.u0.size());
      log.inputs.row(t) = res.u0.transpose();
      log.diags.push_back(res.diag);
      x = plant(x, res.u0);
      log.states.row(t + 1) = x.transpose();
      done = t + 1;
    }
  } catch (const std::exception& e) {
    log.completed = false;
    log.error = e.what();
    log.states.conservativeResize(done + 1, Eigen::NoChange);
    if (log.inputs.size() != 0) log.inputs.conservativeResize(done, Eigen::NoChange);
  }
  return log;
}

void ClosedLoopLog::to_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  const int n_x = static_cast<int>(states.cols());
  const int n_u = static_cast<int>(inputs.cols());
  f << "step";
  for (int i = 1; i <= n_x; ++i) f << ",x_" << i;
  for (int i = 1; i <= n_u; ++i) f << ",u_" << i;
  f << ",solver_status,primal_res,dual_res,solve_iterations\n";
  char buf[32];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (int t = 0; t < states.rows(); ++t) {
    f << t;
    for (int i = 0; i < n_x; ++i) f << "," << fmt(states(t, i));
    for (int i = 0; i < n_u; ++i)
      f << "," << (t < inputs.rows() ? fmt(inputs(t, i)) : std::string());
    if (t < static_cast<int>(diags.size())) {
      f << "," << to_string(diags[t].status) << "," << fmt(diags[t].res_prim)
        << "," << fmt(diags[t].res_dual) << "," << diags[t].iterations;
    } else {
      f << ",,,,";
    }
    f << "\n";
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json timeline_to_json(const Timeline& tl) {
  if (tl.empty()) return nullptr;
  nlohmann::json rows = nlohmann::json::array();
  const Eigen::MatrixXd& data = tl.data();
  for (int r = 0; r < data.rows(); ++r) {
    std::vector<double> row(data.cols());
    for (int i = 0; i < data.cols(); ++i) row[i] = data(r, i);
    rows.push_back(row);
  }
  return {{"schedule", rows}};
}

Timeline timeline_from_json(const nlohmann::json& j, int dim) {
  if (j.is_null()) return {};
  auto parse_num = [](const nlohmann::json& v) {
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return kInf;
      if (s == "-inf") return -kInf;
      throw std::invalid_argument("timeline: bad value " + s);
    }
    return v.get<double>();
  };
  if (j.contains("constant")) {
    const auto& a = j.at("constant");
    Eigen::VectorXd row(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) row[static_cast<int>(i)] = parse_num(a[i]);
    if (row.size() != dim) throw std::invalid_argument("timeline: bad dim");
    return Timeline::constant(row);
  }
  const auto& rows = j.at("schedule");
  Eigen::MatrixXd m(rows.size(), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (static_cast<int>(rows[r].size()) != dim)
      throw std::invalid_argument("timeline: bad dim");
    for (int i = 0; i < dim; ++i) m(static_cast<int>(r), i) = parse_num(rows[r][i]);
  }
  return Timeline::schedule(m);
}

Eigen::VectorXd weights_from_json(const nlohmann::json& j, int dim) {
  if (j.is_null()) return {};
  if (j.is_number()) return Eigen::VectorXd::Constant(dim, j.get<double>());
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json mpc_spec_to_json(const MpcSpec& s) {
  nlohmann::json j;
  j["horizon"] = s.horizon;
  j["weights"] = {
      {"req", std::vector<double>(s.weights.req.begin(), s.weights.req.end())},
      {"u", std::vector<double>(s.weights.u.begin(), s.weights.u.end())},
      {"soft", std::vector<double>(s.weights.soft.begin(), s.weights.soft.end())}};
  j["state_nonneg"] = s.state_nonneg;
  j["input_nonneg"] = s.input_nonneg;
  j["map_input_bounds_beyond_t0"] = s.map_input_bounds_beyond_t0;
  j["n_x"] = static_cast<int>(s.weights.req.size());
  j["n_u"] = static_cast<int>(s.weights.u.size());
  j["x_req"] = timeline_to_json(s.x_req);
  j["x_lo"] = timeline_to_json(s.x_lo);
  j["x_hi"] = timeline_to_json(s.x_hi);
  j["u_lo"] = timeline_to_json(s.u_lo);
  j["u_hi"] = timeline_to_json(s.u_hi);
  j["x_soft_hi"] = timeline_to_json(s.x_soft_hi);
  j["x_soft_lo"] = timeline_to_json(s.x_soft_lo);
  return j;
}

MpcSpec mpc_spec_from_json(const nlohmann::json& j) {
  MpcSpec s;
  s.horizon = j.at("horizon").get<int>();
  const int n_x = j.at("n_x").get<int>();
  const int n_u = j.at("n_u").get<int>();
  const auto& jw = j.at("weights");
  s.weights.req = weights_from_json(jw.value("req", nlohmann::json()), n_x);
  s.weights.u = weights_from_json(jw.value("u", nlohmann::json()), n_u);
  s.weights.soft = weights_from_json(jw.value("soft", nlohmann::json()), n_x);
  if (j.contains("state_nonneg"))
    s.state_nonneg = j.at("state_nonneg").get<std::vector<bool>>();
  if (j.contains("input_nonneg"))
    s.input_nonneg = j.at("input_nonneg").get<std::vector<bool>>();
  s.map_input_bounds_beyond_t0 = j.value("map_input_bounds_beyond_t0", false);
  s.x_req = timeline_from_json(j.value("x_req", nlohmann::json()), n_x);
  s.x_lo = timeline_from_json(j.value("x_lo", nlohmann::json()), n_x);
  s.x_hi = timeline_from_json(j.value("x_hi", nlohmann::json()), n_x);
  s.u_lo = timeline_from_json(j.value("u_lo", nlohmann::json()), n_u);
  s.u_hi = timeline_from_json(j.value("u_hi", nlohmann::json()), n_u);
  s.x_soft_hi = timeline_from_json(j.value("x_soft_hi", nlohmann::json()), n_x);
  s.x_soft_lo = timeline_from_json(j.value("x_soft_lo", nlohmann::json()), n_x);
  return s;
}

}  // namespace sdyn
