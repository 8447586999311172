#include "sdyn/sign.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sdyn {

SignSet SignSet::of(std::initializer_list<int> signs) {
  SignSet s;
  s.bits_ = 0;
  for (int v : signs) {
    switch (v) {
      case 0: s.bits_ |= 0b001; break;
      case 1: s.bits_ |= 0b010; break;
      case -1: s.bits_ |= 0b100; break;
      default: throw std::invalid_argument("SignSet: sign must be in {1,-1,0}");
    }
  }
  if (s.bits_ == 0) throw std::invalid_argument("SignSet: must be nonempty");
  return s;
}

bool SignSet::contains(int sign) const {
  switch (sign) {
    case 0: return bits_ & 0b001;
    case 1: return bits_ & 0b010;
    case -1: return bits_ & 0b100;
    default: return false;
  }
}

int SignSet::size() const {
  return ((bits_ >> 0) & 1) + ((bits_ >> 1) & 1) + ((bits_ >> 2) & 1);
}

bool SignSet::singleton() const { return size() == 1; }

int SignSet::the_sign() const {
  if (!singleton()) throw std::logic_error("SignSet: not a singleton");
  if (bits_ & 0b001) return 0;
  if (bits_ & 0b010) return 1;
  return -1;
}

std::vector<int> SignSet::members() const {
  std::vector<int> m;
  if (bits_ & 0b010) m.push_back(1);
  if (bits_ & 0b100) m.push_back(-1);
  if (bits_ & 0b001) m.push_back(0);
  return m;
}

std::string SignSet::str() const {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (int v : members()) {
    if (!first) os << ",";
    os << v;
    first = false;
  }
  os << "}";
  return os.str();
}

SignPattern SignPattern::unconstrained(int n_x, int n_u, TimeKind kind) {
  SignPattern p;
  p.n_x = n_x;
  p.n_u = n_u;
  p.s_state.assign(static_cast<std::size_t>(n_x) * n_x, SignSet::any());
  p.s_input.assign(static_cast<std::size_t>(n_x) * n_u, SignSet::any());
  p.s_zero.assign(n_x, SignSet::any());
  p.time_kind = kind;
  return p;
}

SignPattern SignPattern::monotone(int n_x, int n_u, TimeKind kind) {
  SignPattern p = unconstrained(n_x, n_u, kind);
  std::fill(p.s_state.begin(), p.s_state.end(), SignSet::nonneg());
  std::fill(p.s_input.begin(), p.s_input.end(), SignSet::nonneg());
  return p;
}

SignPattern SignPattern::as_continuous() const {
  SignPattern p = *this;
  p.time_kind = TimeKind::continuous;
  return p;
}

bool SignPattern::all_state_unconstrained() const {
  return std::all_of(s_state.begin(), s_state.end(),
                     [](const SignSet& s) { return s == SignSet::any(); });
}

bool Box::contains(const Eigen::VectorXd& v, double tol) const {
  if (v.size() != lo.size()) return false;
  for (int i = 0; i < v.size(); ++i)
    if (v[i] < lo[i] - tol || v[i] > hi[i] + tol) return false;
  return true;
}

Eigen::VectorXd Box::sample(std::mt19937_64& rng) const {
  Eigen::VectorXd v(lo.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < v.size(); ++i) v[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
  return v;
}

int sign_of(double value, double tol) {
  if (!std::isfinite(value)) throw std::domain_error("sign_of: non-finite value");
  if (tol < 0.0) throw std::invalid_argument("sign_of: tol must be >= 0");
  if (std::abs(value) <= tol) return 0;
  return value > 0.0 ? 1 : -1;
}

void ConstraintReport::add(Violation v, int max_recorded) {
  passed = false;
  if (static_cast<int>(violations.size()) < max_recorded)
    violations.push_back(std::move(v));
}

namespace {

const char* role_name(Violation::Role r) {
  switch (r) {
    case Violation::Role::state: return "state";
    case Violation::Role::input: return "input";
    default: return "zero";
  }
}

}  // namespace

nlohmann::json ConstraintReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed;
  j["seed"] = seed;
  j["n_samples"] = n_samples;
  j["tolerances"] = {{"sign_tol", tol}, {"fd_step", fd_step}};
  auto viol = nlohmann::json::array();
  for (const auto& v : violations) {
    nlohmann::json jv;
    jv["role"] = role_name(v.role);
    jv["index"] = {v.i, v.j};
    jv["observed"] = v.observed;
    jv["allowed"] = v.allowed.str();
    jv["value"] = v.value;
    jv["witness_x"] = std::vector<double>(v.witness_x.begin(), v.witness_x.end());
    jv["witness_u"] = std::vector<double>(v.witness_u.begin(), v.witness_u.end());
    viol.push_back(std::move(jv));
  }
  j["violations"] = std::move(viol);
  return j;
}

ConstraintReport check_linear(const LinearSystem& sys, const SignPattern& pattern,
                              double tol) {
  if (sys.A.rows() != pattern.n_x || sys.A.cols() != pattern.n_x ||
      sys.B.rows() != pattern.n_x || sys.B.cols() != pattern.n_u ||
      sys.c.size() != pattern.n_x)
    throw std::invalid_argument("check_linear: dimension mismatch");

  ConstraintReport rep;
  rep.tol = tol;
  const bool cont = pattern.time_kind == TimeKind::continuous;
  for (int i = 0; i < pattern.n_x; ++i) {
    for (int j = 0; j < pattern.n_x; ++j) {
      if (cont && i == j) continue;
      int s = sign_of(sys.A(i, j), tol);
      if (!pattern.state(i, j).contains(s))
        rep.add({Violation::Role::state, i, j, s, pattern.state(i, j),
                 sys.A(i, j), {}, {}},
                64);
    }
    for (int j = 0; j < pattern.n_u; ++j) {
      int s = sign_of(sys.B(i, j), tol);
      if (!pattern.input(i, j).contains(s))
        rep.add({Violation::Role::input, i, j, s, pattern.input(i, j),
                 sys.B(i, j), {}, {}},
                64);
    }
    int s = sign_of(sys.c[i], tol);
    if (!pattern.s_zero[i].contains(s))
      rep.add({Violation::Role::zero, i, 0, s, pattern.s_zero[i], sys.c[i],
               {}, {}},
              64);
  }
  return rep;
}

namespace {

Eigen::VectorXd eval_or_rethrow(const DynMap& f, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u) {
  try {
    return f(x, u);
  } catch (const std::exception& e) {
    std::ostringstream os;
    os << "dynamics evaluation failed at x=[" << x.transpose() << "], u=["
       << u.transpose() << "]: " << e.what();
    throw std::runtime_error(os.str());
  }
}

}  // namespace

ConstraintReport check_sampled(const DynMap& f, const SignPattern& pattern,
                               const Box& state_box, const Box& input_box,
                               const SampledCheckOptions& opts) {
  if (opts.n_samples < 1)
    throw std::invalid_argument("check_sampled: n_samples must be >= 1");
  if (state_box.dim() != pattern.n_x || input_box.dim() != pattern.n_u)
    throw std::invalid_argument("check_sampled: box dimension mismatch");

  ConstraintReport rep;
  rep.seed = opts.seed;
  rep.n_samples = opts.n_samples;
  rep.fd_step = opts.fd_step;
  rep.tol = opts.tol;

  std::mt19937_64 rng(opts.seed);
  const bool cont = pattern.time_kind == TimeKind::continuous;
  const int n_x = pattern.n_x, n_u = pattern.n_u;

  for (int s = 0; s < opts.n_samples; ++s) {
    Eigen::VectorXd x = state_box.sample(rng);
    Eigen::VectorXd u = input_box.sample(rng);

    for (int j = 0; j < n_x; ++j) {
      const double h = opts.fd_step * (1.0 + std::abs(x[j]));
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      Eigen::VectorXd col =
          (eval_or_rethrow(f, xp, u) - eval_or_rethrow(f, xm, u)) / (2.0 * h);
      for (int i = 0; i < n_x; ++i) {
        if (cont && i == j) continue;
        int sg = sign_of(col[i], opts.tol);
        if (!pattern.state(i, j).contains(sg))
          rep.add({Violation::Role::state, i, j, sg, pattern.state(i, j),
                   col[i], x, u},
                  opts.max_recorded);
      }
    }
    for (int j = 0; j < n_u; ++j) {
      const double h = opts.fd_step * (1.0 + std::abs(u[j]));
      Eigen::VectorXd up = u, um = u;
      up[j] += h;
      um[j] -= h;
      Eigen::VectorXd col =
          (eval_or_rethrow(f, x, up) - eval_or_rethrow(f, x, um)) / (2.0 * h);
      for (int i = 0; i < n_x; ++i) {
        int sg = sign_of(col[i], opts.tol);
        if (!pattern.input(i, j).contains(sg))
          rep.add({Violation::Role::input, i, j, sg, pattern.input(i, j),
                   col[i], x, u},
                  opts.max_recorded);
      }
    }
  }

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n_x);
  Eigen::VectorXd u0 = Eigen::VectorXd::Zero(n_u);
  if (state_box.contains(x0) && input_box.contains(u0)) {
    Eigen::VectorXd f0 = eval_or_rethrow(f, x0, u0);
    for (int i = 0; i < n_x; ++i) {
      int sg = sign_of(f0[i], opts.tol);
      if (!pattern.s_zero[i].contains(sg))
        rep.add({Violation::Role::zero, i, 0, sg, pattern.s_zero[i], f0[i], x0,
                 u0},
                opts.max_recorded);
    }
  }
  return rep;
}

ConstraintReport check_positivity_empirical(const DynMap& f, const Box& state_box,
                                            const Box& input_box,
                                            const PositivityCheckOptions& opts) {
  if ((state_box.lo.array() < 0.0).any() || (input_box.lo.array() < 0.0).any())
    throw std::invalid_argument(
        "check_positivity_empirical: boxes must lie in the nonnegative orthant");

  ConstraintReport rep;
  rep.seed = opts.seed;
  rep.n_samples = opts.n_rollouts;
  rep.tol = opts.tol;

  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<int> hold(opts.hold_min, opts.hold_max);

  for (int r = 0; r < opts.n_rollouts; ++r) {
    Eigen::VectorXd x = state_box.sample(rng);
    Eigen::VectorXd u = input_box.sample(rng);
    int remaining = hold(rng);
    for (int t = 0; t < opts.horizon; ++t) {
      if (remaining == 0) {
        u = input_box.sample(rng);
        remaining = hold(rng);
      }
      --remaining;
      x = eval_or_rethrow(f, x, u);
      for (int i = 0; i < x.size(); ++i) {
        if (x[i] < -opts.tol) {
          rep.add({Violation::Role::state, i, t, -1, SignSet::nonneg(), x[i],
                   x, u},
                  opts.max_recorded);
        }
      }
      if (!rep.passed && static_cast<int>(rep.violations.size()) >= opts.max_recorded)
        return rep;
    }
  }
  return rep;
}

DynMap discrete_to_continuous(DynMap f_d, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("discrete_to_continuous: dt must be > 0");
  return [f = std::move(f_d), dt](const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return (f(x, u) - x) / dt;
  };
}

namespace {

nlohmann::json signset_to_json(const SignSet& s) { return s.members(); }

SignSet signset_from_json(const nlohmann::json& j) {
  SignSet s = SignSet::any();
  std::vector<int> m = j.get<std::vector<int>>();
  if (m.empty()) throw std::invalid_argument("sign set must be nonempty");
  if (m.size() == 1) return SignSet::of({m[0]});
  if (m.size() == 2) return SignSet::of({m[0], m[1]});
  return SignSet::of({m[0], m[1], m[2]});
}

}  // namespace

nlohmann::json pattern_to_json(const SignPattern& p) {
  nlohmann::json j;
  j["n_x"] = p.n_x;
  j["n_u"] = p.n_u;
  j["time_kind"] = p.time_kind == TimeKind::discrete ? "discrete" : "continuous";
  auto grid = [](const std::vector<SignSet>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& s : v) a.push_back(signset_to_json(s));
    return a;
  };
  j["s_state"] = grid(p.s_state);
  j["s_input"] = grid(p.s_input);
  j["s_zero"] = grid(p.s_zero);
  return j;
}

SignPattern pattern_from_json(const nlohmann::json& j) {
  SignPattern p;
  p.n_x = j.at("n_x").get<int>();
  p.n_u = j.at("n_u").get<int>();
  p.time_kind = j.at("time_kind").get<std::string>() == "continuous"
                    ? TimeKind::continuous
                    : TimeKind::discrete;
  auto grid = [](const nlohmann::json& a) {
    std::vector<SignSet> v;
    v.reserve(a.size());
    for (const auto& e : a) v.push_back(signset_from_json(e));
    return v;
  };
  p.s_state = grid(j.at("s_state"));
  p.s_input = grid(j.at("s_input"));
  p.s_zero = grid(j.at("s_zero"));
  if (static_cast<int>(p.s_state.size()) != p.n_x * p.n_x ||
      static_cast<int>(p.s_input.size()) != p.n_x * p.n_u ||
      static_cast<int>(p.s_zero.size()) != p.n_x)
    throw std::invalid_argument("sign pattern: grid sizes inconsistent with dims");
  return p;
}

}  // namespace sdyn
