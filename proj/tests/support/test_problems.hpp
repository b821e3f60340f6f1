#ifndef ADAPTQP_TESTS_TEST_PROBLEMS_HPP
#define ADAPTQP_TESTS_TEST_PROBLEMS_HPP

#include <cmath>

#include <Eigen/Dense>

#include "adaptqp/problem.hpp"
#include "adaptqp/rng.hpp"
#include "adaptqp/sparse.hpp"

namespace adaptqp_tests {

/// Strictly convex random QP with a feasible interior built around a witness
/// point: l <= A x0 <= u by construction.
inline adaptqp::QpProblem random_strictly_convex(adaptqp::Rng& rng, int n, int m,
                                                 double eq_fraction = 0.0) {
  adaptqp::QpProblem prob;
  prob.n = n;
  prob.m = m;
  Eigen::MatrixXd base(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) base(i, j) = rng.normal();
  Eigen::MatrixXd psd = base * base.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  prob.p = adaptqp::SparseMatrix::from_dense(psd);
  prob.q.resize(n);
  for (int i = 0; i < n; ++i) prob.q[i] = rng.normal();

  Eigen::MatrixXd a(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = rng.bernoulli(0.8) ? rng.normal() : 0.0;
    if (a.row(i).cwiseAbs().maxCoeff() == 0.0) a(i, 0) = 1.0;
  }
  prob.a = adaptqp::SparseMatrix::from_dense(a);

  Eigen::VectorXd x0(n);
  for (int i = 0; i < n; ++i) x0[i] = rng.normal();
  const Eigen::VectorXd ax0 = a * x0;
  prob.l.resize(m);
  prob.u.resize(m);
  for (int i = 0; i < m; ++i) {
    if (rng.uniform() < eq_fraction) {
      prob.l[i] = prob.u[i] = ax0[i];
    } else {
      prob.l[i] = ax0[i] - std::abs(rng.normal()) - 0.1;
      prob.u[i] = ax0[i] + std::abs(rng.normal()) + 0.1;
    }
  }
  return prob;
}

}  // namespace adaptqp_tests

#endif
