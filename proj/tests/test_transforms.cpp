#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <nlohmann/json.hpp>
#include <random>

#include "sdyn/autodiff.hpp"
#include "sdyn/transforms.hpp"

using namespace sdyn;

namespace {

SinhLayer random_layer(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ab(-1.0, 1.0);
  std::uniform_real_distribution<double> w(0.1, 1.5);
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

}  // namespace

TEST_SUITE("transforms") {

TEST_CASE("a=0 with unit weight collapses the layer to the identity") {
  SinhLayer l;
  l.a = Eigen::VectorXd::Zero(1);
  l.b = Eigen::VectorXd::Constant(1, 0.7);
  l.w_raw = Eigen::VectorXd::Constant(1, 1.0 - l.eps);  // effective weight 1
  Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 1.234);
  CHECK(l.forward(z)[0] == doctest::Approx(1.234).epsilon(1e-12));
  CHECK(l.inverse(z)[0] == doctest::Approx(1.234).epsilon(1e-12));
}

TEST_CASE("every layer fixes zero: forward exactly, inverse to machine precision") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    SinhLayer l = random_layer(3, rng);
    CHECK(l.forward(Eigen::VectorXd::Zero(3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(l.inverse(Eigen::VectorXd::Zero(3)).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("closed-form value at a=1, b=0, w=1, z=1") {
  SinhLayer l;
  l.a = Eigen::VectorXd::Constant(1, 1.0);
  l.b = Eigen::VectorXd::Zero(1);
  l.w_raw = Eigen::VectorXd::Constant(1, 1.0 - l.eps);
  const double expect = std::asinh(1.0 + std::sinh(1.0)) - std::asinh(1.0);
  CHECK(expect == doctest::Approx(0.6380).epsilon(1e-4));
  CHECK(l.forward(Eigen::VectorXd::Constant(1, 1.0))[0] ==
        doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("forward/inverse roundtrip to 1e-10") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> zdist(-10.0, 10.0);
  MonotoneTransform t = random_transform(4, 3, rng);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd z(4);
    for (int i = 0; i < 4; ++i) z[i] = zdist(rng);
    Eigen::VectorXd y = t.forward(z);
    CHECK((t.inverse(y) - z).cwiseAbs().maxCoeff() <= 1e-9);
    Eigen::VectorXd z2 = t.inverse(z);
    CHECK((t.forward(z2) - z).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("diagonal Jacobian matches finite differences and stays positive") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> zdist(-3.0, 3.0);
  MonotoneTransform t = random_transform(3, 2, rng);
  const double h = 1e-6;
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd z(3);
    for (int i = 0; i < 3; ++i) z[i] = zdist(rng);
    Eigen::VectorXd d = t.diag_jacobian(z);
    CHECK(d.minCoeff() > 0.0);
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      const double fd = (t.forward(zp)[i] - t.forward(zm)[i]) / (2 * h);
      CHECK(d[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("strict monotonicity on ordered pairs") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> zdist(-5.0, 5.0);
  std::uniform_real_distribution<double> step(0.01, 1.0);
  MonotoneTransform t = random_transform(2, 2, rng);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd z(2);
    z << zdist(rng), zdist(rng);
    Eigen::VectorXd dz(2);
    dz << step(rng), step(rng);
    Eigen::VectorXd lo = t.forward(z), hi = t.forward(z + dz);
    CHECK((hi - lo).minCoeff() > 0.0);
  }
}

TEST_CASE("zero-layer transform is the identity") {
  MonotoneTransform t(3);
  Eigen::VectorXd z = Eigen::Vector3d(0.1, -2.0, 5.0);
  CHECK((t.forward(z) - z).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t.inverse(z) - z).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t.diag_jacobian(z) - Eigen::Vector3d::Ones()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("overflow guard on large arguments") {
  SinhLayer l;
  l.a = Eigen::VectorXd::Zero(1);
  l.b = Eigen::VectorXd::Zero(1);
  l.w_raw = Eigen::VectorXd::Constant(1, 100.0);
  CHECK_THROWS_AS(l.forward(Eigen::VectorXd::Constant(1, 10.0)), std::domain_error);
}

TEST_CASE("layer parameter gradients match finite differences via the tape") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double a = dist(rng), b = dist(rng);
    double w_raw = dist(rng);
    if (std::abs(w_raw) < 1e-3) w_raw = 0.1;  // stay off the relu kink
    const double z = 2.0 * dist(rng);
    const double eps = kDefaultLayerEps;

    ad::Tape tape;
    ad::Expr pa = tape.param(0), pb = tape.param(1), pw = tape.param(2);
    ad::Expr zi = tape.input(0);
    ad::Expr w = ad::relu(pw) + eps;
    ad::Expr y = ad::asinh(pa + ad::sinh(w * zi + pb)) -
                 ad::asinh(pa + ad::sinh(pb));

    std::vector<double> params{a, b, w_raw}, values, adjoint, grad(3, 0.0);
    std::vector<double> input{z};
    tape.forward(params, input, values);
    tape.backward(y, values, adjoint, grad, {});

    auto eval = [&](double pa_, double pb_, double pw_) {
      SinhLayer l;
      l.a = Eigen::VectorXd::Constant(1, pa_);
      l.b = Eigen::VectorXd::Constant(1, pb_);
      l.w_raw = Eigen::VectorXd::Constant(1, pw_);
      l.eps = eps;
      return l.forward(Eigen::VectorXd::Constant(1, z))[0];
    };
    const double h = 1e-6;
    CHECK(grad[0] ==
          doctest::Approx((eval(a + h, b, w_raw) - eval(a - h, b, w_raw)) / (2 * h))
              .epsilon(1e-5));
    CHECK(grad[1] ==
          doctest::Approx((eval(a, b + h, w_raw) - eval(a, b - h, w_raw)) / (2 * h))
              .epsilon(1e-5));
    CHECK(grad[2] ==
          doctest::Approx((eval(a, b, w_raw + h) - eval(a, b, w_raw - h)) / (2 * h))
              .epsilon(1e-5));
  }
}

TEST_CASE("conditioned transform fixes zero for every conditioning state") {
  std::mt19937_64 rng(37);
  ConditionedTransform ct = ConditionedTransform::identity_init(2, 3, 2, 3, rng);
  std::uniform_real_distribution<double> xd(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd x(3);
    x << xd(rng), xd(rng), xd(rng);
    CHECK(ct.eval(Eigen::VectorXd::Zero(2), x).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("zero-output hypernets give an x-independent transform") {
  std::mt19937_64 rng(41);
  ConditionedTransform ct = ConditionedTransform::identity_init(1, 2, 2, 3, rng);
  // constant_init zeroes the output layers, so any two x agree
  Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 0.8);
  Eigen::VectorXd xa = Eigen::Vector2d(0.0, 0.0), xb = Eigen::Vector2d(1.5, -2.0);
  CHECK(ct.eval(u, xa)[0] == doctest::Approx(ct.eval(u, xb)[0]).epsilon(1e-15));
  // and equals the bias-induced plain transform
  MonotoneTransform frozen = ct.materialize(xb);
  CHECK(ct.eval(u, xa)[0] == doctest::Approx(frozen.forward(u)[0]).epsilon(1e-15));
}

TEST_CASE("conditioned inverse roundtrip at random (u, x)") {
  std::mt19937_64 rng(43);
  ConditionedTransform ct = ConditionedTransform::identity_init(2, 2, 3, 3, rng);
  // perturb hypernet outputs so the transform genuinely depends on x
  auto nets = ct.nets();
  std::uniform_real_distribution<double> d(-0.3, 0.3);
  for (auto& ln : nets) {
    for (int i = 0; i < ln.a.w3.rows(); ++i)
      for (int j = 0; j < ln.a.w3.cols(); ++j) ln.a.w3(i, j) = d(rng);
    for (int i = 0; i < ln.w_raw.w3.rows(); ++i)
      for (int j = 0; j < ln.w_raw.w3.cols(); ++j) ln.w_raw.w3(i, j) = d(rng);
  }
  ConditionedTransform ct2(2, 2, nets);
  std::uniform_real_distribution<double> ud(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd u = Eigen::Vector2d(ud(rng), ud(rng));
    Eigen::VectorXd x = Eigen::Vector2d(ud(rng), ud(rng));
    Eigen::VectorXd v = ct2.eval(u, x);
    CHECK((ct2.inverse(v, x) - u).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("conditioned jacobians match finite differences") {
  std::mt19937_64 rng(47);
  ConditionedTransform ct0 = ConditionedTransform::identity_init(2, 3, 2, 3, rng);
  auto nets = ct0.nets();
  std::uniform_real_distribution<double> d(-0.4, 0.4);
  for (auto& ln : nets)
    for (Hypernet* h : {&ln.a, &ln.b, &ln.w_raw})
      for (int i = 0; i < h->w3.rows(); ++i)
        for (int j = 0; j < h->w3.cols(); ++j) h->w3(i, j) = d(rng);
  ConditionedTransform ct(2, 3, nets);

  std::uniform_real_distribution<double> ud(-1.5, 1.5);
  const double h = 1e-6;
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd u = Eigen::Vector2d(ud(rng), ud(rng));
    Eigen::VectorXd x = Eigen::Vector3d(ud(rng), ud(rng), ud(rng));
    auto J = ct.jacobians(u, x);
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd up = u, um = u;
      up[i] += h;
      um[i] -= h;
      const double fd = (ct.eval(up, x)[i] - ct.eval(um, x)[i]) / (2 * h);
      CHECK(J.du[i] == doctest::Approx(fd).epsilon(1e-6));
    }
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      Eigen::VectorXd fd = (ct.eval(u, xp) - ct.eval(u, xm)) / (2 * h);
      for (int i = 0; i < 2; ++i)
        CHECK(J.dx(i, j) == doctest::Approx(fd[i]).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("transform JSON roundtrips") {
  std::mt19937_64 rng(53);
  MonotoneTransform t = random_transform(3, 2, rng);
  MonotoneTransform t2 = transform_from_json(transform_to_json(t));
  Eigen::VectorXd z = Eigen::Vector3d(0.3, -1.0, 2.0);
  CHECK((t.forward(z) - t2.forward(z)).cwiseAbs().maxCoeff() == 0.0);

  ConditionedTransform ct = ConditionedTransform::identity_init(2, 3, 2, 3, rng);
  InputTransform it(ct);
  InputTransform it2 = input_transform_from_json(input_transform_to_json(it));
  Eigen::VectorXd u = Eigen::Vector2d(0.5, -0.5), x = Eigen::Vector3d(1, 2, 3);
  CHECK((it.eval(u, x) - it2.eval(u, x)).cwiseAbs().maxCoeff() == 0.0);
}

}  // TEST_SUITE
