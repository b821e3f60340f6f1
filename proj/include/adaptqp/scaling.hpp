#ifndef ADAPTQP_SCALING_HPP
#define ADAPTQP_SCALING_HPP

#include <cmath>

#include <Eigen/Dense>

#include "adaptqp/errors.hpp"
#include "adaptqp/problem.hpp"
#include "adaptqp/sparse.hpp"

namespace adaptqp {

struct ObjectiveScaling {
  SparseMatrix p;
  Eigen::VectorXd q;
  double p_star = 1.0;
};

/// Divides (P, q) by p* = max(max_n |P_nn|, 2 max_{i!=j} |P_ij|).
///
/// One pass is a fixed point: the rescaled matrix has scaler exactly 1.
/// P = 0 falls back to p* = 1 and passes the inputs through.
inline ObjectiveScaling scale_objective(const SparseMatrix& p, const Eigen::VectorXd& q) {
  double max_diag = 0.0;
  double max_offdiag = 0.0;
  for (const Triplet& t : p.entries()) {
    if (t.row == t.col) {
      max_diag = std::max(max_diag, std::abs(t.value));
    } else {
      max_offdiag = std::max(max_offdiag, std::abs(t.value));
    }
  }
  double p_star = std::max(max_diag, 2.0 * max_offdiag);
  if (p_star == 0.0) p_star = 1.0;

  ObjectiveScaling out;
  out.p = p;
  out.p.scale_all(1.0 / p_star);
  out.q = q / p_star;
  out.p_star = p_star;
  return out;
}

struct ConstraintScaling {
  SparseMatrix a;
  Eigen::VectorXd l;
  Eigen::VectorXd u;
  Eigen::VectorXd row_scalers;
};

/// Divides each row of (A, l, u) by a*_m = max_n |A_mn|; all-zero rows keep
/// a*_m = 1. Infinite bounds stay infinite (inf / positive = inf).
inline ConstraintScaling scale_constraints(const SparseMatrix& a, const Eigen::VectorXd& l,
                                           const Eigen::VectorXd& u) {
  const int m = a.rows();
  Eigen::VectorXd scalers = Eigen::VectorXd::Zero(m);
  for (const Triplet& t : a.entries()) {
    scalers[t.row] = std::max(scalers[t.row], std::abs(t.value));
  }
  for (int i = 0; i < m; ++i) {
    if (scalers[i] == 0.0) scalers[i] = 1.0;
  }

  ConstraintScaling out;
  out.a = a;
  out.a.scale_rows(scalers.cwiseInverse());
  out.l = l.cwiseQuotient(scalers);
  out.u = u.cwiseQuotient(scalers);
  out.row_scalers = scalers;
  return out;
}

/// Applies objective scaling then constraint scaling and records the scalers.
/// The scaled problem has the same optimal x: the objective is multiplied by
/// the positive constant 1/p*, and each constraint row is divided by a
/// positive constant, which leaves the feasible set unchanged.
inline QpProblem preprocess(const QpProblem& prob) {
  if (prob.scaled) throw AlreadyScaled("problem already preprocessed");

  QpProblem out = prob;
  ObjectiveScaling obj = scale_objective(prob.p, prob.q);
  out.p = std::move(obj.p);
  out.q = std::move(obj.q);
  out.obj_scaler = obj.p_star;

  ConstraintScaling con = scale_constraints(prob.a, prob.l, prob.u);
  out.a = std::move(con.a);
  out.l = std::move(con.l);
  out.u = std::move(con.u);
  out.row_scalers = std::move(con.row_scalers);

  out.scaled = true;
  return out;
}

/// Maps duals of the preprocessed problem back to the original problem's
/// units: y_m = p* y'_m / a*_m.
inline Eigen::VectorXd unscale_duals(const QpProblem& scaled_prob, const Eigen::VectorXd& y_scaled) {
  if (!scaled_prob.scaled) throw InvalidArgument("unscale_duals needs a preprocessed problem");
  return scaled_prob.obj_scaler * y_scaled.cwiseQuotient(scaled_prob.row_scalers);
}

}  // namespace adaptqp

#endif
