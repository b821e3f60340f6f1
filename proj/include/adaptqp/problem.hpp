#ifndef ADAPTQP_PROBLEM_HPP
#define ADAPTQP_PROBLEM_HPP

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "adaptqp/errors.hpp"
#include "adaptqp/sparse.hpp"

namespace adaptqp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A convex QP instance
///
///     minimize    1/2 x' P x + q' x
///     subject to  l <= A x <= u
///
/// with P symmetric positive semi-definite (n x n) and A an m x n constraint
/// matrix. After preprocess() the scaling state (obj_scaler, row_scalers)
/// records the applied divisors so duals can be mapped back.
struct QpProblem {
  int n = 0;
  int m = 0;
  SparseMatrix p;  // n x n, symmetric
  Eigen::VectorXd q;
  SparseMatrix a;  // m x n
  Eigen::VectorXd l;
  Eigen::VectorXd u;

  bool scaled = false;
  double obj_scaler = 1.0;
  Eigen::VectorXd row_scalers;  // length m, all positive
};

enum class SolveStatus { Solved, MaxIterations, NumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "solved";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // duals in the original (unscaled) problem's units
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterations;
  double norm_r_primal = kInf;  // residual norms of the scaled problem at exit
  double norm_r_dual = kInf;
};

/// Checks every QpProblem invariant; throws on the first violation.
inline void validate(const QpProblem& prob) {
  if (prob.n < 1 || prob.m < 1) throw DimensionMismatch("need n >= 1 and m >= 1");
  if (prob.p.rows() != prob.n || prob.p.cols() != prob.n)
    throw DimensionMismatch("P must be n x n");
  if (prob.a.rows() != prob.m || prob.a.cols() != prob.n)
    throw DimensionMismatch("A must be m x n");
  if (prob.q.size() != prob.n) throw DimensionMismatch("q must have length n");
  if (prob.l.size() != prob.m || prob.u.size() != prob.m)
    throw DimensionMismatch("l and u must have length m");

  for (const Triplet& t : prob.p.entries()) {
    if (!std::isfinite(t.value)) throw NonFiniteEntry("P has a non-finite entry");
  }
  for (const Triplet& t : prob.a.entries()) {
    if (!std::isfinite(t.value)) throw NonFiniteEntry("A has a non-finite entry");
  }
  for (int i = 0; i < prob.n; ++i) {
    if (!std::isfinite(prob.q[i])) throw NonFiniteEntry("q has a non-finite entry");
  }
  for (int i = 0; i < prob.m; ++i) {
    if (std::isnan(prob.l[i]) || std::isnan(prob.u[i]))
      throw NonFiniteEntry("bounds must not be NaN");
    if (prob.l[i] == kInf || prob.u[i] == -kInf)
      throw NonFiniteEntry("l must be < +inf and u > -inf");
    if (prob.l[i] > prob.u[i]) throw BoundsCrossed("l > u in row " + std::to_string(i));
  }
  if (!prob.p.symmetric()) throw AsymmetricP("P is not symmetric");
}

namespace detail {

inline nlohmann::json bound_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

inline double bound_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw InvalidArgument("bound string must be \"inf\" or \"-inf\", got " + s);
  }
  return j.get<double>();
}

inline nlohmann::json triplets_to_json(const SparseMatrix& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Triplet& t : m.entries()) arr.push_back({t.row, t.col, t.value});
  return arr;
}

inline SparseMatrix triplets_from_json(const nlohmann::json& arr, int rows, int cols) {
  SparseMatrix out(rows, cols);
  for (const auto& e : arr) {
    out.insert(e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>());
  }
  out.canonicalize();
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const QpProblem& prob) {
  nlohmann::json j;
  j["n"] = prob.n;
  j["m"] = prob.m;
  j["P"] = detail::triplets_to_json(prob.p);
  j["q"] = std::vector<double>(prob.q.data(), prob.q.data() + prob.q.size());
  j["A"] = detail::triplets_to_json(prob.a);
  nlohmann::json l = nlohmann::json::array(), u = nlohmann::json::array();
  for (int i = 0; i < prob.m; ++i) {
    l.push_back(detail::bound_to_json(prob.l[i]));
    u.push_back(detail::bound_to_json(prob.u[i]));
  }
  j["l"] = l;
  j["u"] = u;
  return j;
}

inline QpProblem problem_from_json(const nlohmann::json& j) {
  QpProblem prob;
  prob.n = j.at("n").get<int>();
  prob.m = j.at("m").get<int>();
  prob.p = detail::triplets_from_json(j.at("P"), prob.n, prob.n);
  prob.a = detail::triplets_from_json(j.at("A"), prob.m, prob.n);
  const auto q = j.at("q");
  prob.q.resize(prob.n);
  for (int i = 0; i < prob.n; ++i) prob.q[i] = q.at(i).get<double>();
  prob.l.resize(prob.m);
  prob.u.resize(prob.m);
  for (int i = 0; i < prob.m; ++i) {
    prob.l[i] = detail::bound_from_json(j.at("l").at(i));
    prob.u[i] = detail::bound_from_json(j.at("u").at(i));
  }
  validate(prob);
  return prob;
}

inline void save_problem(const QpProblem& prob, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open " + path + " for writing");
  out << to_json(prob).dump(2) << "\n";
}

inline QpProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return problem_from_json(j);
}

}  // namespace adaptqp

#endif
