#ifndef ADAPTQP_PROBGEN_HPP
#define ADAPTQP_PROBGEN_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptqp/errors.hpp"
#include "adaptqp/problem.hpp"
#include "adaptqp/rng.hpp"
#include "adaptqp/sparse.hpp"

namespace adaptqp {

enum class Family {
  RandomQP,
  EqQP,
  Portfolio,
  Svm,
  Huber,
  Control,
  Lasso,
  EntireRandomQP,
};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::RandomQP: return "random_qp";
    case Family::EqQP: return "eq_qp";
    case Family::Portfolio: return "portfolio";
    case Family::Svm: return "svm";
    case Family::Huber: return "huber";
    case Family::Control: return "control";
    case Family::Lasso: return "lasso";
    case Family::EntireRandomQP: return "entire_random_qp";
  }
  return "unknown";
}

inline Family family_from_name(const std::string& name) {
  for (Family f : {Family::RandomQP, Family::EqQP, Family::Portfolio, Family::Svm, Family::Huber,
                   Family::Control, Family::Lasso, Family::EntireRandomQP}) {
    if (name == family_name(f)) return f;
  }
  throw InvalidArgument("unknown problem family: " + name);
}

inline std::vector<Family> all_families() {
  return {Family::RandomQP, Family::EqQP,  Family::Portfolio, Family::Svm,
          Family::Huber,    Family::Control, Family::Lasso,     Family::EntireRandomQP};
}

/// Constraint count paired with n for each family. The explicit n/m ranges in
/// the size table take precedence over its relation row where the two
/// disagree (portfolio and SVM).
inline int derived_m(Family family, int n) {
  switch (family) {
    case Family::RandomQP: return 3 * n;
    case Family::EqQP: return std::max(1, n / 2);
    case Family::Portfolio: return std::max(1, n / 10);
    case Family::Svm: return 10 * n;
    case Family::Huber: return 10 * n;
    case Family::Control: return std::max(1, n / 2);
    case Family::Lasso: return 10 * n;
    case Family::EntireRandomQP: return 7 * n / 3;
  }
  throw InvalidArgument("unknown family");
}

namespace gen_detail {

/// Bernoulli mask then value sampling, row-major order.
inline Eigen::MatrixXd sparse_normal(Rng& rng, int rows, int cols, double density) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (rng.bernoulli(density)) out(i, j) = rng.normal();
  return out;
}

inline Eigen::VectorXd normal_vector(Rng& rng, int n, double mean = 0.0, double stddev = 1.0) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal(mean, stddev);
  return v;
}

inline QpProblem assemble(const Eigen::MatrixXd& p, const Eigen::VectorXd& q,
                          const Eigen::MatrixXd& a, const Eigen::VectorXd& l,
                          const Eigen::VectorXd& u) {
  QpProblem prob;
  prob.n = static_cast<int>(q.size());
  prob.m = static_cast<int>(l.size());
  prob.p = SparseMatrix::from_dense(p);
  prob.q = q;
  prob.a = SparseMatrix::from_dense(a);
  prob.l = l;
  prob.u = u;
  validate(prob);
  return prob;
}

}  // namespace gen_detail

/// P = M M' with 15%-dense normal M, 45%-dense A, one-sided bounds
/// u_i = (A x)_i + |normal| noise. The nonnegative noise keeps the
/// generating x feasible, so every instance is solvable by construction.
inline QpProblem gen_random_qp(int n, std::uint64_t seed, int m = -1) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (m < 0) m = derived_m(Family::RandomQP, n);
  Rng rng(seed);
  const Eigen::MatrixXd mfac = gen_detail::sparse_normal(rng, n, n, 0.15);
  const Eigen::MatrixXd p = mfac * mfac.transpose();
  const Eigen::VectorXd q = gen_detail::normal_vector(rng, n);
  const Eigen::MatrixXd a = gen_detail::sparse_normal(rng, m, n, 0.45);
  const Eigen::VectorXd x = gen_detail::normal_vector(rng, n);
  const Eigen::VectorXd ax = a * x;
  Eigen::VectorXd u(m);
  for (int i = 0; i < m; ++i) u[i] = ax[i] + std::abs(rng.normal());
  const Eigen::VectorXd l = Eigen::VectorXd::Constant(m, -kInf);
  return gen_detail::assemble(p, q, a, l, u);
}

/// Equality-constrained variant: 30%-dense M, 75%-dense A, l = u = A x.
inline QpProblem gen_eq_qp(int n, std::uint64_t seed, int m = -1) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (m < 0) m = derived_m(Family::EqQP, n);
  Rng rng(seed);
  const Eigen::MatrixXd mfac = gen_detail::sparse_normal(rng, n, n, 0.30);
  const Eigen::MatrixXd p = mfac * mfac.transpose();
  const Eigen::VectorXd q = gen_detail::normal_vector(rng, n);
  const Eigen::MatrixXd a = gen_detail::sparse_normal(rng, m, n, 0.75);
  const Eigen::VectorXd x = gen_detail::normal_vector(rng, n);
  const Eigen::VectorXd b = a * x;
  return gen_detail::assemble(p, q, a, b, b);
}

/// Risk model over stacked (x, y): minimize x'Dx/2 + y'y/2 - mu'x / (2 gamma)
/// with y = F'x, simplex constraint and x >= 0. n assets, m factors.
inline QpProblem gen_portfolio(int n, std::uint64_t seed, int m = -1) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (m < 0) m = derived_m(Family::Portfolio, n);
  Rng rng(seed);
  const double gamma = 1.0;
  const Eigen::MatrixXd f = gen_detail::sparse_normal(rng, n, m, 0.90);
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = std::abs(rng.cauchy()) * std::sqrt(static_cast<double>(m));
  const Eigen::VectorXd mu = gen_detail::normal_vector(rng, n);

  const int nv = n + m;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(nv, nv);
  p.topLeftCorner(n, n) = d.asDiagonal();
  p.bottomRightCorner(m, m).setIdentity();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nv);
  q.head(n) = -mu / (2.0 * gamma);

  const int mc = m + 1 + n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(mc, nv);
  Eigen::VectorXd l(mc), u(mc);
  a.topLeftCorner(m, n) = f.transpose();
  a.block(0, n, m, m) = -Eigen::MatrixXd::Identity(m, m);
  l.head(m).setZero();
  u.head(m).setZero();
  a.row(m).head(n).setOnes();
  l[m] = u[m] = 1.0;
  a.bottomLeftCorner(n, n).setIdentity();
  l.tail(n).setZero();
  u.tail(n).setConstant(kInf);
  return gen_detail::assemble(p, q, a, l, u);
}

/// Hinge-loss classifier over (x, t): half the rows of A are drawn around
/// +1/n, half around -1/n, labels split accordingly, lambda = 1/2.
inline QpProblem gen_svm(int n, std::uint64_t seed, int m = -1) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (m < 0) m = derived_m(Family::Svm, n);
  Rng rng(seed);
  const double lambda = 0.5;
  const double stddev = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd a_data(m, n);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    const bool positive = i < m / 2 || (m == 1 && i == 0);
    b[i] = positive ? 1.0 : -1.0;
    for (int j = 0; j < n; ++j) a_data(i, j) = rng.normal((positive ? 1.0 : -1.0) / n, stddev);
  }

  const int nv = n + m;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(nv, nv);
  p.topLeftCorner(n, n) = 2.0 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nv);
  q.tail(m).setConstant(lambda);

  const int mc = 2 * m;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(mc, nv);
  Eigen::VectorXd l(mc), u(mc);
  // diag(b) A x - t <= -1
  for (int i = 0; i < m; ++i) a.row(i).head(n) = b[i] * a_data.row(i);
  a.block(0, n, m, m) = -Eigen::MatrixXd::Identity(m, m);
  l.head(m).setConstant(-kInf);
  u.head(m).setConstant(-1.0);
  // t >= 0
  a.block(m, n, m, m).setIdentity();
  l.tail(m).setZero();
  u.tail(m).setConstant(kInf);
  return gen_detail::assemble(p, q, a, l, u);
}

/// Robust fitting over (x, u, r, s): minimize u'u + 2 1'(r+s) subject to
/// A x - b = u + r - s with r, s >= 0.
inline QpProblem gen_huber(int n, std::uint64_t seed, int m = -1) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (m < 0) m = derived_m(Family::Huber, n);
  Rng rng(seed);
  const Eigen::MatrixXd a_data = gen_detail::sparse_normal(rng, m, n, 0.50);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.bernoulli(0.95) ? rng.normal(0.0, 0.5) : rng.uniform(0.0, 10.0);
  const Eigen::VectorXd eps = gen_detail::normal_vector(rng, n, 0.0, 1.0 / std::sqrt(n));
  const Eigen::VectorXd b = a_data * (v + eps);

  const int nv = n + 3 * m;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(nv, nv);
  p.block(n, n, m, m) = 2.0 * Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nv);
  q.segment(n + m, m).setConstant(2.0);
  q.tail(m).setConstant(2.0);

  const int mc = 3 * m;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(mc, nv);
  Eigen::VectorXd l(mc), u(mc);
  // A x - u - r + s = b
  a.topLeftCorner(m, n) = a_data;
  a.block(0, n, m, m) = -Eigen::MatrixXd::Identity(m, m);
  a.block(0, n + m, m, m) = -Eigen::MatrixXd::Identity(m, m);
  a.block(0, n + 2 * m, m, m) = Eigen::MatrixXd::Identity(m, m);
  l.head(m) = b;
  u.head(m) = b;
  // r >= 0, s >= 0
  a.block(m, n + m, m, m).setIdentity();
  a.block(2 * m, n + 2 * m, m, m).setIdentity();
  l.tail(2 * m).setZero();
  u.tail(2 * m).setConstant(kInf);
  return gen_detail::assemble(p, q, a, l, u);
}

/// Finite-horizon regulator over stacked states and inputs, T = 5: random
/// near-identity dynamics, diagonal state cost with 30% zeros, input box.
inline QpProblem gen_control(int n, std::uint64_t seed, int m = -1) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (m < 0) m = derived_m(Family::Control, n);
  constexpr int kHorizon = 5;
  Rng rng(seed);
  Eigen::MatrixXd a_dyn = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a_dyn(i, j) += rng.normal(0.0, 0.1);
  Eigen::MatrixXd b_dyn(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) b_dyn(i, j) = rng.normal();
  Eigen::VectorXd q_diag(n);
  for (int i = 0; i < n; ++i) {
    const double v = rng.uniform(0.0, 10.0);
    q_diag[i] = rng.bernoulli(0.30) ? 0.0 : v;
  }
  const double r_cost = 0.1;
  const Eigen::VectorXd x_init = gen_detail::normal_vector(rng, n);

  const int nv = (kHorizon + 1) * n + kHorizon * m;  // x_0..x_T then u_0..u_{T-1}
  const int u_off = (kHorizon + 1) * n;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(nv, nv);
  for (int t = 0; t <= kHorizon; ++t) {
    // objective sums x_t' Q x_t (Q_T = Q), so P carries 2 Q blocks
    p.block(t * n, t * n, n, n) = 2.0 * q_diag.asDiagonal().toDenseMatrix();
  }
  for (int t = 0; t < kHorizon; ++t) {
    p.block(u_off + t * m, u_off + t * m, m, m) =
        2.0 * r_cost * Eigen::MatrixXd::Identity(m, m);
  }
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(nv);

  const int mc = n + kHorizon * n + kHorizon * m;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(mc, nv);
  Eigen::VectorXd l(mc), u(mc);
  // x_0 = x_init
  a.topLeftCorner(n, n).setIdentity();
  l.head(n) = x_init;
  u.head(n) = x_init;
  // x_{t+1} - A x_t - B u_t = 0
  for (int t = 0; t < kHorizon; ++t) {
    const int row = n + t * n;
    a.block(row, (t + 1) * n, n, n).setIdentity();
    a.block(row, t * n, n, n) = -a_dyn;
    a.block(row, u_off + t * m, n, m) = -b_dyn;
    l.segment(row, n).setZero();
    u.segment(row, n).setZero();
  }
  // u_t in [-1, 1]
  for (int t = 0; t < kHorizon; ++t) {
    const int row = n + kHorizon * n + t * m;
    a.block(row, u_off + t * m, m, m).setIdentity();
    l.segment(row, m).setConstant(-1.0);
    u.segment(row, m).setConstant(1.0);
  }
  return gen_detail::assemble(p, q, a, l, u);
}

/// Sparse regression over (x, y, t): minimize y'y/2 + gamma 1't with
/// y = A x - b and -t <= x <= t, gamma = |A'b|_inf / 5.
inline QpProblem gen_lasso(int n, std::uint64_t seed, int m = -1) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (m < 0) m = derived_m(Family::Lasso, n);
  Rng rng(seed);
  const Eigen::MatrixXd a_data = gen_detail::sparse_normal(rng, m, n, 0.90);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.bernoulli(0.5) ? 0.0 : rng.normal(0.0, 1.0 / std::sqrt(n));
  const Eigen::VectorXd eps = gen_detail::normal_vector(rng, m);
  const Eigen::VectorXd b = a_data * v + eps;
  const double gamma = (a_data.transpose() * b).cwiseAbs().maxCoeff() / 5.0;

  const int nv = 2 * n + m;  // x, y, t
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(nv, nv);
  p.block(n, n, m, m).setIdentity();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nv);
  q.tail(n).setConstant(gamma);

  const int mc = m + 2 * n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(mc, nv);
  Eigen::VectorXd l(mc), u(mc);
  // A x - y = b
  a.topLeftCorner(m, n) = a_data;
  a.block(0, n, m, m) = -Eigen::MatrixXd::Identity(m, m);
  l.head(m) = b;
  u.head(m) = b;
  // x - t <= 0
  a.block(m, 0, n, n).setIdentity();
  a.block(m, n + m, n, n) = -Eigen::MatrixXd::Identity(n, n);
  l.segment(m, n).setConstant(-kInf);
  u.segment(m, n).setZero();
  // x + t >= 0
  a.block(m + n, 0, n, n).setIdentity();
  a.block(m + n, n + m, n, n).setIdentity();
  l.tail(n).setZero();
  u.tail(n).setConstant(kInf);
  return gen_detail::assemble(p, q, a, l, u);
}

/// Mixed block: floor(m/7) inequality rows (plus the division remainder) and
/// floor(6m/7) equality rows, both 60% dense.
inline QpProblem gen_entire_random_qp(int n, std::uint64_t seed, int m = -1) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (m < 0) m = derived_m(Family::EntireRandomQP, n);
  if (m < 2) m = 2;
  Rng rng(seed);
  const int m2 = 6 * m / 7;
  const int m1 = m - m2;  // floor(m/7) plus any remainder
  const Eigen::MatrixXd mfac = gen_detail::sparse_normal(rng, n, n, 0.15);
  const Eigen::MatrixXd p = mfac * mfac.transpose();
  const Eigen::VectorXd q = gen_detail::normal_vector(rng, n);
  const Eigen::MatrixXd a_ineq = gen_detail::sparse_normal(rng, m1, n, 0.60);
  const Eigen::VectorXd x = gen_detail::normal_vector(rng, n);
  Eigen::VectorXd u_ineq(m1);
  const Eigen::VectorXd ax = a_ineq * x;
  for (int i = 0; i < m1; ++i) u_ineq[i] = ax[i] + std::abs(rng.normal());
  const Eigen::MatrixXd b_eq = gen_detail::sparse_normal(rng, m2, n, 0.60);
  const Eigen::VectorXd b = b_eq * x;

  Eigen::MatrixXd a(m, n);
  a.topRows(m1) = a_ineq;
  a.bottomRows(m2) = b_eq;
  Eigen::VectorXd l(m), u(m);
  l.head(m1).setConstant(-kInf);
  u.head(m1) = u_ineq;
  l.tail(m2) = b;
  u.tail(m2) = b;
  return gen_detail::assemble(p, q, a, l, u);
}

struct GeneratorSpec {
  Family family = Family::RandomQP;
  int n = 10;
  int m = -1;  // -1 derives m from the family relation
  std::uint64_t seed = 0;
};

inline QpProblem generate(const GeneratorSpec& spec) {
  switch (spec.family) {
    case Family::RandomQP: return gen_random_qp(spec.n, spec.seed, spec.m);
    case Family::EqQP: return gen_eq_qp(spec.n, spec.seed, spec.m);
    case Family::Portfolio: return gen_portfolio(spec.n, spec.seed, spec.m);
    case Family::Svm: return gen_svm(spec.n, spec.seed, spec.m);
    case Family::Huber: return gen_huber(spec.n, spec.seed, spec.m);
    case Family::Control: return gen_control(spec.n, spec.seed, spec.m);
    case Family::Lasso: return gen_lasso(spec.n, spec.seed, spec.m);
    case Family::EntireRandomQP: return gen_entire_random_qp(spec.n, spec.seed, spec.m);
  }
  throw InvalidArgument("unknown family");
}

}  // namespace adaptqp

#endif
