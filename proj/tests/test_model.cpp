#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>
#include <stdexcept>

#include "sdyn/model.hpp"
#include "sdyn/plants.hpp"

using namespace sdyn;

namespace {

SinhLayer random_layer(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ab(-0.8, 0.8);
  std::uniform_real_distribution<double> w(0.1, 1.2);
  SinhLayer l;
  l.a.resize(dim);
  l.b.resize(dim);
  l.w_raw.resize(dim);
  for (int i = 0; i < dim; ++i) {
    l.a[i] = ab(rng);
    l.b[i] = ab(rng);
    l.w_raw[i] = w(rng);
  }
  return l;
}

MonotoneTransform random_transform(int dim, int layers, std::mt19937_64& rng) {
  std::vector<SinhLayer> ls;
  for (int k = 0; k < layers; ++k) ls.push_back(random_layer(dim, rng));
  return MonotoneTransform(dim, std::move(ls));
}

SignedLinearCore random_core(const SignPattern& pat, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> raw(-0.4, 0.4);
  Eigen::MatrixXd a(pat.n_x, pat.n_x), b(pat.n_x, pat.n_u);
  Eigen::VectorXd c(pat.n_x);
  for (int i = 0; i < pat.n_x; ++i) {
    for (int j = 0; j < pat.n_x; ++j) a(i, j) = raw(rng);
    for (int j = 0; j < pat.n_u; ++j) b(i, j) = raw(rng);
    c[i] = raw(rng);
  }
  return SignedLinearCore(a, b, c, pat);
}

ELModel random_two_tank_model(std::mt19937_64& rng) {
  SignPattern pat = two_tank_pattern();
  return ELModel(random_transform(2, 2, rng),
                 InputTransform(random_transform(1, 2, rng)),
                 random_core(pat, rng));
}

ConditionedTransform random_conditioned(int dim, int cond, int layers,
                                        std::mt19937_64& rng) {
  ConditionedTransform base =
      ConditionedTransform::identity_init(dim, cond, layers, 3, rng);
  auto nets = base.nets();
  std::uniform_real_distribution<double> d(-0.3, 0.3);
  for (auto& ln : nets)
    for (Hypernet* h : {&ln.a, &ln.b, &ln.w_raw})
      for (int i = 0; i < h->w3.rows(); ++i)
        for (int j = 0; j < h->w3.cols(); ++j) h->w3(i, j) = d(rng);
  return ConditionedTransform(dim, cond, std::move(nets));
}

ELModel random_powertrain_model(std::mt19937_64& rng) {
  SignPattern pat = powertrain_pattern();
  return ELModel(random_transform(3, 3, rng),
                 InputTransform(random_conditioned(3, 3, 3, rng)),
                 random_core(pat, rng));
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("effective core entries follow the sign reparameterization") {
  SignPattern pat = SignPattern::unconstrained(1, 1);
  auto entry = [&](SignSet s, double raw) {
    pat.s_zero[0] = s;
    SignedLinearCore core(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1),
                          Eigen::VectorXd::Constant(1, raw), pat, 0.01);
    return core.effective().c[0];
  };
  CHECK(entry(SignSet::strictly(1), -3.0) == doctest::Approx(0.01));
  CHECK(entry(SignSet::strictly(-1), 2.0) == doctest::Approx(-2.01));
  CHECK(entry(SignSet::only_zero(), 5.0) == 0.0);
  CHECK(entry(SignSet::nonneg(), -1.0) == 0.0);
  CHECK(entry(SignSet::nonneg(), 0.7) == doctest::Approx(0.7));
  CHECK(entry(SignSet::nonpos(), 0.7) == doctest::Approx(-0.7));
  CHECK(entry(SignSet::any(), -0.3) == doctest::Approx(-0.3));
  CHECK_THROWS_AS(entry(SignSet::of({1, -1}), 1.0), std::invalid_argument);
}

TEST_CASE("effective core always passes check_linear") {
  std::mt19937_64 rng(61);
  for (int k = 0; k < 50; ++k) {
    SignPattern pat = k % 2 == 0 ? two_tank_pattern() : powertrain_pattern();
    SignedLinearCore core = random_core(pat, rng);
    CHECK(check_linear(core.effective(), pat).passed);
  }
}

TEST_CASE("identity-collapsed transforms reduce predict to the affine map") {
  std::mt19937_64 rng(67);
  SignPattern pat = SignPattern::unconstrained(2, 1);
  SignedLinearCore core = random_core(pat, rng);
  LinearSystem sys = core.effective();
  ELModel m(MonotoneTransform::identity_init(2, 2),
            InputTransform(MonotoneTransform::identity_init(1, 2)), core);
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd x = Eigen::Vector2d::Random();
    Eigen::VectorXd u = Eigen::VectorXd::Random(1);
    Eigen::VectorXd expect = sys.A * x + sys.B * u + sys.c;
    CHECK((m.predict(x, u) - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("zero maps to zero when the offset sign set is {0}") {
  std::mt19937_64 rng(71);
  ELModel m = random_two_tank_model(rng);  // two-tank s_zero = {0}
  Eigen::VectorXd out = m.predict(Eigen::Vector2d::Zero(), Eigen::VectorXd::Zero(1));
  CHECK(out.cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("predict equals the manual transform composition") {
  std::mt19937_64 rng(73);
  for (int k = 0; k < 10; ++k) {
    ELModel m = random_powertrain_model(rng);
    Eigen::VectorXd x = 0.5 * Eigen::Vector3d::Random();
    Eigen::VectorXd u = 0.5 * Eigen::Vector3d::Random();
    LinearSystem sys = m.core().effective();
    Eigen::VectorXd manual = m.phi().inverse(
        sys.A * m.phi().forward(x) + sys.B * m.psi().eval(u, x) + sys.c);
    CHECK((m.predict(x, u) - manual).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("analytic jacobians: linear collapse returns the core matrices") {
  std::mt19937_64 rng(79);
  SignPattern pat = SignPattern::unconstrained(2, 2);
  SignedLinearCore core = random_core(pat, rng);
  ELModel m(MonotoneTransform(2), InputTransform(MonotoneTransform(2)), core);
  auto J = m.jacobians(Eigen::Vector2d(0.3, -0.2), Eigen::Vector2d(0.1, 0.4));
  LinearSystem sys = core.effective();
  CHECK((J.dx - sys.A).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((J.du - sys.B).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("analytic jacobians match finite differences") {
  std::mt19937_64 rng(83);
  const double h = 1e-6;
  for (int k = 0; k < 5; ++k) {
    for (bool powertrain : {false, true}) {
      ELModel m = powertrain ? random_powertrain_model(rng)
                             : random_two_tank_model(rng);
      const int n_x = m.state_dim(), n_u = m.input_dim();
      for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd x = 0.5 * Eigen::VectorXd::Random(n_x).cwiseAbs();
        Eigen::VectorXd u = 0.5 * Eigen::VectorXd::Random(n_u);
        auto J = m.jacobians(x, u);
        for (int j = 0; j < n_x; ++j) {
          Eigen::VectorXd xp = x, xm = x;
          xp[j] += h;
          xm[j] -= h;
          Eigen::VectorXd fd = (m.predict(xp, u) - m.predict(xm, u)) / (2 * h);
          for (int i = 0; i < n_x; ++i)
            CHECK(J.dx(i, j) == doctest::Approx(fd[i]).epsilon(1e-5).scale(1.0));
        }
        for (int j = 0; j < n_u; ++j) {
          Eigen::VectorXd up = u, um = u;
          up[j] += h;
          um[j] -= h;
          Eigen::VectorXd fd = (m.predict(x, up) - m.predict(x, um)) / (2 * h);
          for (int i = 0; i < n_x; ++i)
            CHECK(J.du(i, j) == doctest::Approx(fd[i]).epsilon(1e-5).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("input-jacobian signs equal the effective B signs everywhere probed") {
  std::mt19937_64 rng(89);
  for (int k = 0; k < 5; ++k) {
    ELModel m = random_powertrain_model(rng);
    const Eigen::MatrixXd B = m.core().effective().B;
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::VectorXd x = Eigen::Vector3d::Random();
      Eigen::VectorXd u = Eigen::Vector3d::Random();
      auto J = m.jacobians(x, u);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          CHECK(sign_of(J.du(i, j), 1e-12) == sign_of(B(i, j), 1e-12));
    }
  }
}

TEST_CASE("verify_structural certifies fresh models and flags mismatched patterns") {
  std::mt19937_64 rng(97);
  ELModel m = random_two_tank_model(rng);
  CHECK(verify_structural(m, m.pattern()).passed);

  // a freely parameterized core checked against a {0} demand must fail
  SignPattern free_pat = SignPattern::unconstrained(2, 1);
  SignedLinearCore core = random_core(free_pat, rng);
  core.a_raw(0, 1) = 0.5;
  ELModel free_model(random_transform(2, 2, rng),
                     InputTransform(random_transform(1, 2, rng)), core);
  SignPattern demanding = SignPattern::unconstrained(2, 1);
  demanding.state(0, 1) = SignSet::only_zero();
  ConstraintReport rep = verify_structural(free_model, demanding);
  CHECK(!rep.passed);
  REQUIRE(!rep.violations.empty());
  CHECK(rep.violations[0].role == Violation::Role::state);
  CHECK(rep.violations[0].i == 0);
  CHECK(rep.violations[0].j == 1);
}

TEST_CASE("structural pass implies sampled pass") {
  std::mt19937_64 rng(101);
  ELModel m = random_two_tank_model(rng);
  REQUIRE(verify_structural(m, m.pattern()).passed);
  Box sb{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(0.5, 0.5)};
  Box ib{Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 9.0)};
  SampledCheckOptions opts;
  opts.n_samples = 1000;
  opts.seed = 7;
  CHECK(check_sampled(m.as_map(), m.pattern(), sb, ib, opts).passed);
}

TEST_CASE("state-dependent psi with constrained state sets is refused") {
  std::mt19937_64 rng(103);
  SignPattern pat = two_tank_pattern();  // has constrained state sets
  pat.n_u = 1;
  CHECK_THROWS_AS(
      ELModel(random_transform(2, 2, rng),
              InputTransform(random_conditioned(1, 2, 2, rng)),
              random_core(pat, rng)),
      std::invalid_argument);
}

TEST_CASE("predict is injective in u for full-column-rank B") {
  std::mt19937_64 rng(107);
  for (int k = 0; k < 10; ++k) {
    ELModel m = random_two_tank_model(rng);
    if (m.core().effective().B.cwiseAbs().maxCoeff() < 1e-6) continue;
    Eigen::VectorXd x = Eigen::Vector2d(0.2, 0.3);
    Eigen::VectorXd u1 = Eigen::VectorXd::Random(1);
    Eigen::VectorXd u2 = u1 + Eigen::VectorXd::Constant(1, 0.1);
    CHECK((m.predict(x, u1) - m.predict(x, u2)).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("flatten/unflatten roundtrip and parameter counts") {
  std::mt19937_64 rng(109);
  ELModel tt = random_two_tank_model(rng);
  CHECK(tt.param_count() == 26);
  ELModel pt = random_powertrain_model(rng);
  CHECK(pt.param_count() == 372);

  Eigen::VectorXd theta = pt.params();
  CHECK(theta.size() == 372);
  Eigen::VectorXd bumped = theta;
  bumped[100] += 0.125;
  pt.set_params(bumped);
  CHECK(pt.params()[100] == doctest::Approx(theta[100] + 0.125));
  pt.set_params(theta);
  CHECK((pt.params() - theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("NN baselines have the reference parameter counts") {
  MlpModel two_tank_nn(2, 1, {2, 2, 2}, MlpModel::Activation::tanh, 1);
  CHECK(two_tank_nn.param_count() == 26);
  MlpModel powertrain_nn(3, 3, {15, 15}, MlpModel::Activation::relu, 1);
  CHECK(powertrain_nn.param_count() == 393);
}

TEST_CASE("model JSON roundtrips preserve predictions") {
  std::mt19937_64 rng(113);
  ELModel m = random_powertrain_model(rng);
  auto m2 = model_from_json(m.to_json());
  Eigen::VectorXd x = Eigen::Vector3d(0.1, 0.2, 0.3);
  Eigen::VectorXd u = Eigen::Vector3d(-0.2, 0.4, 0.1);
  CHECK((m.predict(x, u) - m2->predict(x, u)).cwiseAbs().maxCoeff() == 0.0);

  MlpModel nn(2, 1, {2, 2, 2}, MlpModel::Activation::tanh, 5);
  auto nn2 = model_from_json(nn.to_json());
  Eigen::VectorXd x2 = Eigen::Vector2d(0.4, -0.1), u2 = Eigen::VectorXd::Constant(1, 2.0);
  CHECK((nn.predict(x2, u2) - nn2->predict(x2, u2)).cwiseAbs().maxCoeff() == 0.0);
}

}  // TEST_SUITE
