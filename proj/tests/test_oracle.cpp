#include <doctest.h>

#include "adaptqp/problem.hpp"
#include "adaptqp/rng.hpp"
#include "support/qp_oracle.hpp"
#include "support/test_problems.hpp"

using namespace adaptqp;
using adaptqp_tests::oracle_solve;

namespace {

QpProblem scalar_qp(double p, double q, double l, double u) {
  QpProblem prob;
  prob.n = 1;
  prob.m = 1;
  prob.p = SparseMatrix(1, 1, p == 0.0 ? std::vector<Triplet>{} : std::vector<Triplet>{{0, 0, p}});
  prob.q = Eigen::VectorXd::Constant(1, q);
  prob.a = SparseMatrix(1, 1, {{0, 0, 1.0}});
  prob.l = Eigen::VectorXd::Constant(1, l);
  prob.u = Eigen::VectorXd::Constant(1, u);
  return prob;
}

}  // namespace

TEST_CASE("oracle: interior optimum of a scalar box QP") {
  // min 1/2 x^2 - x  s.t. 0 <= x <= 2  ->  x* = 1, y* = 0
  auto sol = oracle_solve(scalar_qp(1.0, -1.0, 0.0, 2.0));
  REQUIRE(sol.found);
  CHECK(sol.unique);
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.y[0] == doctest::Approx(0.0));
}

TEST_CASE("oracle: active lower bound carries a negative dual") {
  // min 1/2 x^2  s.t. x >= 1  ->  x* = 1, stationarity x + y = 0 -> y = -1
  auto sol = oracle_solve(scalar_qp(1.0, 0.0, 1.0, kInf));
  REQUIRE(sol.found);
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.y[0] == doctest::Approx(-1.0));
}

TEST_CASE("oracle: active upper bound carries a positive dual") {
  // min 1/2 x^2 - 2x  s.t. x <= 1  ->  x* = 1, y = 1
  auto sol = oracle_solve(scalar_qp(1.0, -2.0, -kInf, 1.0));
  REQUIRE(sol.found);
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.y[0] == doctest::Approx(1.0));
}

TEST_CASE("oracle: unbounded LP yields no certificate") {
  // min -x  s.t. x >= 0
  auto sol = oracle_solve(scalar_qp(0.0, -1.0, 0.0, kInf));
  CHECK_FALSE(sol.found);
}

TEST_CASE("oracle: flat objective is found but flagged non-unique") {
  auto sol = oracle_solve(scalar_qp(0.0, 0.0, 0.0, 1.0));
  REQUIRE(sol.found);
  CHECK_FALSE(sol.unique);
}

TEST_CASE("oracle: equality-constrained QP matches the closed form") {
  // min 1/2 (x1^2 + x2^2)  s.t. x1 + x2 = 2  ->  x = (1, 1), y = -1
  QpProblem prob;
  prob.n = 2;
  prob.m = 1;
  prob.p = SparseMatrix(2, 2, {{0, 0, 1.0}, {1, 1, 1.0}});
  prob.q = Eigen::VectorXd::Zero(2);
  prob.a = SparseMatrix(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
  prob.l = Eigen::VectorXd::Constant(1, 2.0);
  prob.u = Eigen::VectorXd::Constant(1, 2.0);
  auto sol = oracle_solve(prob);
  REQUIRE(sol.found);
  CHECK(sol.unique);
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.x[1] == doctest::Approx(1.0));
  CHECK(sol.y[0] == doctest::Approx(-1.0));
}

TEST_CASE("oracle: KKT stationarity holds on random strictly convex instances") {
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    QpProblem prob = adaptqp_tests::random_strictly_convex(rng, 3, 5, 0.3);
    auto sol = oracle_solve(prob);
    REQUIRE(sol.found);
    CHECK(sol.unique);
    const Eigen::VectorXd grad =
        prob.p.multiply(sol.x) + prob.q + prob.a.multiply_transpose(sol.y);
    CHECK(grad.cwiseAbs().maxCoeff() < 1e-6);
    const Eigen::VectorXd ax = prob.a.multiply(sol.x);
    for (int i = 0; i < prob.m; ++i) {
      CHECK(ax[i] >= prob.l[i] - 1e-6);
      CHECK(ax[i] <= prob.u[i] + 1e-6);
    }
  }
}
