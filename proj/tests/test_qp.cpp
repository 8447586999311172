#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "qp_oracle.hpp"
#include "sdyn/qp.hpp"

using namespace sdyn;

TEST_SUITE("qp") {

TEST_CASE("clipped scalar: min (z-1)^2 on [0, 0.5]") {
  QPProblem p;
  p.P = Eigen::MatrixXd::Constant(1, 1, 2.0).sparseView();
  p.q = Eigen::VectorXd::Constant(1, -2.0);
  p.A = Eigen::MatrixXd::Constant(1, 1, 1.0).sparseView();
  p.l = Eigen::VectorXd::Constant(1, 0.0);
  p.u = Eigen::VectorXd::Constant(1, 0.5);
  QPSolution s = solve_qp(p);
  CHECK(s.status == QPStatus::solved);
  CHECK(s.z[0] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("unconstrained strictly convex minimum") {
  std::mt19937_64 rng(3);
  QPProblem p = test::random_qp(4, 1, rng);
  p.A.resize(0, 4);
  p.l.resize(0);
  p.u.resize(0);
  QPSolution s = solve_qp(p);
  CHECK(s.status == QPStatus::solved);
  Eigen::VectorXd direct =
      Eigen::MatrixXd(p.P).ldlt().solve(-p.q);
  CHECK((s.z - direct).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK(s.res_dual <= 1e-8);
}

TEST_CASE("random QPs match the active-set oracle") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> nd(2, 5), md(1, 8);
  int solved = 0;
  for (int rep = 0; rep < 40; ++rep) {
    QPProblem p = test::random_qp(nd(rng), md(rng), rng);
    test::OracleResult oracle = test::active_set_oracle(p);
    REQUIRE(oracle.found);
    QPSolution s = solve_qp(p);
    REQUIRE(s.status == QPStatus::solved);
    CHECK((s.z - oracle.z).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(s.res_prim <= 1e-8);
    CHECK(s.res_dual <= 1e-8);
    const double obj = 0.5 * s.z.dot(p.P * s.z) + p.q.dot(s.z);
    CHECK(obj <= oracle.objective + 1e-8);
    ++solved;
  }
  CHECK(solved == 40);
}

TEST_CASE("uniqueness: warm starts do not change the answer") {
  std::mt19937_64 rng(11);
  QPProblem p = test::random_qp(5, 6, rng);
  AdmmSolver solver(p);
  QPSolution cold = solver.solve();
  REQUIRE(cold.status == QPStatus::solved);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int rep = 0; rep < 5; ++rep) {
    QPSolution warm = cold;
    for (int i = 0; i < warm.z.size(); ++i) warm.z[i] += d(rng);
    for (int i = 0; i < warm.y.size(); ++i) warm.y[i] += d(rng);
    QPSolution s = solver.solve(&warm);
    REQUIRE(s.status == QPStatus::solved);
    CHECK((s.z - cold.z).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("vector updates reuse the factorization and keep tolerances") {
  std::mt19937_64 rng(13);
  QPProblem p = test::random_qp(4, 6, rng);
  AdmmSolver solver(p);
  QPSolution prev = solver.solve();
  REQUIRE(prev.status == QPStatus::solved);
  std::uniform_real_distribution<double> d(-0.05, 0.05);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd q = solver.problem().q;
    Eigen::VectorXd l = solver.problem().l;
    Eigen::VectorXd u = solver.problem().u;
    for (int i = 0; i < q.size(); ++i) q[i] += d(rng);
    for (int i = 0; i < l.size(); ++i) {
      const double shift = d(rng);
      if (std::isfinite(l[i])) l[i] += shift;
      if (std::isfinite(u[i])) u[i] += std::abs(shift);  // keep l <= u
    }
    solver.update_vectors(&q, &l, &u);
    QPSolution s = solver.solve(&prev);
    REQUIRE(s.status == QPStatus::solved);
    CHECK(s.res_prim <= solver.settings().tol_prim);
    CHECK(s.res_dual <= solver.settings().tol_dual);
    prev = s;
  }
}

TEST_CASE("primal infeasibility is detected") {
  // z >= 1 and z <= 0 simultaneously
  QPProblem p;
  p.P = Eigen::MatrixXd::Constant(1, 1, 2.0).sparseView();
  p.q = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd a(2, 1);
  a << 1.0, 1.0;
  p.A = a.sparseView();
  p.l = Eigen::Vector2d(1.0, -kInf);
  p.u = Eigen::Vector2d(kInf, 0.0);
  QPSolution s = solve_qp(p);
  CHECK(s.status == QPStatus::primal_infeasible);
}

TEST_CASE("iteration cap reports max_iter with the best iterate") {
  std::mt19937_64 rng(17);
  QPProblem p = test::random_qp(5, 8, rng);
  QPSettings st;
  st.max_iter = 2;
  st.check_interval = 1;
  st.polish = false;
  QPSolution s = solve_qp(p, st);
  CHECK(s.status == QPStatus::max_iter);
  CHECK(s.iterations <= 2);
  CHECK(s.z.size() == 5);
}

TEST_CASE("validation rejects bad problems") {
  QPProblem p;
  p.P = Eigen::MatrixXd::Constant(1, 1, -1.0).sparseView();  // indefinite
  p.q = Eigen::VectorXd::Zero(1);
  p.A.resize(0, 1);
  p.l.resize(0);
  p.u.resize(0);
  CHECK_THROWS_AS(solve_qp(p), std::invalid_argument);

  QPProblem p2;
  p2.P = Eigen::MatrixXd::Constant(1, 1, 1.0).sparseView();
  p2.q = Eigen::VectorXd::Zero(1);
  p2.A = Eigen::MatrixXd::Constant(1, 1, 1.0).sparseView();
  p2.l = Eigen::VectorXd::Constant(1, 2.0);
  p2.u = Eigen::VectorXd::Constant(1, 1.0);  // l > u
  CHECK_THROWS_AS(solve_qp(p2), std::invalid_argument);

  QPProblem p3;
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, -0.5, 1.0;
  p3.P = asym.sparseView();
  p3.q = Eigen::VectorXd::Zero(2);
  p3.A.resize(0, 2);
  p3.l.resize(0);
  p3.u.resize(0);
  CHECK_THROWS_AS(solve_qp(p3), std::invalid_argument);
}

TEST_CASE("triplet dump writes a readable file") {
  std::mt19937_64 rng(19);
  QPProblem p = test::random_qp(3, 4, rng);
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "sdyn_qp_dump.txt";
  p.dump(path.string());
  std::ifstream f(path);
  std::string first;
  std::getline(f, first);
  CHECK(first.find("sparse QP dump") != std::string::npos);
  fs::remove(path);
}

}  // TEST_SUITE
