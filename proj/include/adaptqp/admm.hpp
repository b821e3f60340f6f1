#ifndef ADAPTQP_ADMM_HPP
#define ADAPTQP_ADMM_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "adaptqp/errors.hpp"
#include "adaptqp/ldlt.hpp"
#include "adaptqp/problem.hpp"
#include "adaptqp/scaling.hpp"
#include "adaptqp/sparse.hpp"

namespace adaptqp {

struct AdmmSettings {
  double sigma = 1e-6;
  double eps_primal = 1e-3;
  double eps_dual = 1e-3;
  int max_iterations = 5000;
  double rho_min = 1e-6;
  double rho_max = 1e6;
  int check_interval = 10;    // iterations between termination checks / policy calls
  double rho_init = 0.1;
  double refactor_tol = 1e-12;  // relative rho change that triggers refactorization

  void check() const {
    if (sigma <= 0.0) throw InvalidArgument("sigma must be positive");
    if (eps_primal <= 0.0 || eps_dual <= 0.0) throw InvalidArgument("tolerances must be positive");
    if (rho_min <= 0.0 || rho_min >= rho_max) throw InvalidArgument("need 0 < rho_min < rho_max");
    if (check_interval < 1) throw InvalidArgument("check_interval must be >= 1");
  }
};

/// ADMM iterates and residuals for one solve. All quantities live in the
/// preprocessed problem's units.
struct AdmmState {
  Eigen::VectorXd x;    // n
  Eigen::VectorXd z;    // m, inside [l, u] after every iteration
  Eigen::VectorXd y;    // m
  Eigen::VectorXd nu;   // m
  Eigen::VectorXd rho;  // m, positive
  int iteration = 0;

  Eigen::VectorXd r_primal;  // m
  Eigen::VectorXd r_dual;   // n
  int residual_iteration = -1;  // iteration the residuals were computed at

  bool residuals_current() const { return residual_iteration == iteration; }
};

inline Eigen::VectorXd project_box(const Eigen::VectorXd& v, const Eigen::VectorXd& l,
                                   const Eigen::VectorXd& u) {
  return v.cwiseMax(l).cwiseMin(u);
}

inline AdmmState init_state(const QpProblem& prob, const AdmmSettings& settings) {
  AdmmState s;
  s.x = Eigen::VectorXd::Zero(prob.n);
  s.z = project_box(Eigen::VectorXd::Zero(prob.m), prob.l, prob.u);
  s.y = Eigen::VectorXd::Zero(prob.m);
  s.nu = Eigen::VectorXd::Zero(prob.m);
  s.rho = Eigen::VectorXd::Constant(prob.m, settings.rho_init);
  return s;
}

/// Factorization of [[P + sigma I, A'], [A, -diag(rho)^-1]].
///
/// The (2,2) block carries a minus sign so the matrix is quasi-definite and
/// the box-projection splitting below is consistent.
class KktFactorization {
 public:
  KktFactorization(const QpProblem& prob, const Eigen::VectorXd& rho, double sigma) {
    if (rho.size() != prob.m) throw DimensionMismatch("rho must have length m");
    if ((rho.array() <= 0.0).any()) throw InvalidArgument("rho must be strictly positive");
    if (sigma <= 0.0) throw InvalidArgument("sigma must be positive");
    rho_snapshot_ = rho;

    const int dim = prob.n + prob.m;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dim, dim);
    for (const Triplet& t : prob.p.entries()) k(t.row, t.col) = t.value;
    for (int i = 0; i < prob.n; ++i) k(i, i) += sigma;
    for (const Triplet& t : prob.a.entries()) {
      k(prob.n + t.row, t.col) = t.value;
      k(t.col, prob.n + t.row) = t.value;
    }
    for (int i = 0; i < prob.m; ++i) k(prob.n + i, prob.n + i) = -1.0 / rho[i];
    ldlt_.factorize(k);
  }

  const Eigen::VectorXd& rho_snapshot() const { return rho_snapshot_; }
  const DenseLdlt& ldlt() const { return ldlt_; }

 private:
  Eigen::VectorXd rho_snapshot_;
  DenseLdlt ldlt_;
};

inline KktFactorization factorize_kkt(const QpProblem& prob, const Eigen::VectorXd& rho,
                                      double sigma) {
  return KktFactorization(prob, rho, sigma);
}

/// Solves the KKT system with right-hand side [sigma x - q; z - diag(rho)^-1 y].
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> solve_kkt(const KktFactorization& fact,
                                                             const AdmmState& state,
                                                             const QpProblem& prob,
                                                             double sigma) {
  if (fact.rho_snapshot() != state.rho) {
    throw StaleFactorization("factorization was computed for a different rho");
  }
  Eigen::VectorXd rhs(prob.n + prob.m);
  rhs.head(prob.n) = sigma * state.x - prob.q;
  rhs.tail(prob.m) = state.z - state.y.cwiseQuotient(state.rho);
  Eigen::VectorXd sol = fact.ldlt().solve(rhs);
  return {sol.head(prob.n), sol.tail(prob.m)};
}

/// One ADMM step:
///   (x, nu)  <- KKT solve
///   z_tilde  <- z + diag(rho)^-1 (nu - y)
///   z        <- Pi(z_tilde + diag(rho)^-1 y)
///   y        <- y + diag(rho) (z_tilde - z)
inline void admm_iteration(AdmmState& state, const QpProblem& prob, const KktFactorization& fact,
                           const AdmmSettings& settings) {
  auto [x_next, nu_next] = solve_kkt(fact, state, prob, settings.sigma);
  const Eigen::VectorXd rho_inv = state.rho.cwiseInverse();
  const Eigen::VectorXd z_tilde = state.z + rho_inv.cwiseProduct(nu_next - state.y);
  const Eigen::VectorXd z_next = project_box(z_tilde + rho_inv.cwiseProduct(state.y), prob.l, prob.u);
  state.y += state.rho.cwiseProduct(z_tilde - z_next);
  state.x = std::move(x_next);
  state.nu = std::move(nu_next);
  state.z = z_next;
  ++state.iteration;
}

/// r_primal = A x - z,  r_dual = P x + q + A' y.
inline void compute_residuals(AdmmState& state, const QpProblem& prob) {
  state.r_primal = prob.a.multiply(state.x) - state.z;
  state.r_dual = prob.p.multiply(state.x) + prob.q + prob.a.multiply_transpose(state.y);
  state.residual_iteration = state.iteration;
}

inline double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

inline bool check_termination(const AdmmState& state, const AdmmSettings& settings) {
  return inf_norm(state.r_primal) <= settings.eps_primal &&
         inf_norm(state.r_dual) <= settings.eps_dual;
}

/// Per-check-interval bookkeeping for plots and the benchmark harness.
struct TraceRow {
  int iteration = 0;
  double norm_r_primal = 0.0;
  double norm_r_dual = 0.0;
  double rho_mean_log10 = 0.0;
  double rho_min_log10 = 0.0;
  double rho_max_log10 = 0.0;
};

inline TraceRow make_trace_row(const AdmmState& state) {
  TraceRow row;
  row.iteration = state.iteration;
  row.norm_r_primal = inf_norm(state.r_primal);
  row.norm_r_dual = inf_norm(state.r_dual);
  const Eigen::ArrayXd logs = state.rho.array().log10();
  row.rho_mean_log10 = logs.mean();
  row.rho_min_log10 = logs.minCoeff();
  row.rho_max_log10 = logs.maxCoeff();
  return row;
}

/// Step-size policy hook. Called at every check interval with current
/// residuals; returns the rho vector to use for the next interval.
class RhoPolicy {
 public:
  virtual ~RhoPolicy() = default;
  virtual Eigen::VectorXd act(const QpProblem& prob, const AdmmState& state,
                              const AdmmSettings& settings) = 0;
  /// Called once at the start of a solve, before the first act().
  virtual void begin_episode(const QpProblem& prob, const AdmmState& state,
                             const AdmmSettings& settings) {}
};

struct WarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd z;
  Eigen::VectorXd y;
};

struct SolveResult {
  QpSolution solution;
  std::vector<TraceRow> trace;
};

/// Full solve loop. Preprocesses (unless already scaled), then alternates
/// check_interval ADMM iterations with residual checks and policy calls.
/// The policy is consulted at iteration 0 as well, mirroring the step
/// protocol of the training environment.
inline SolveResult solve(const QpProblem& problem, RhoPolicy& policy, const AdmmSettings& settings,
                         const std::optional<WarmStart>& warm = std::nullopt) {
  settings.check();
  const QpProblem prob = problem.scaled ? problem : preprocess(problem);

  AdmmState state = init_state(prob, settings);
  if (warm) {
    state.x = warm->x;
    state.z = project_box(warm->z, prob.l, prob.u);
    state.y = warm->y;
  }

  SolveResult result;
  auto finish = [&](SolveStatus status, const AdmmState& s) {
    result.solution.x = s.x;
    result.solution.y = unscale_duals(prob, s.y);
    result.solution.iterations = s.iteration;
    result.solution.status = status;
    result.solution.norm_r_primal = inf_norm(s.r_primal);
    result.solution.norm_r_dual = inf_norm(s.r_dual);
    return result;
  };

  try {
    KktFactorization fact = factorize_kkt(prob, state.rho, settings.sigma);
    compute_residuals(state, prob);
    policy.begin_episode(prob, state, settings);

    AdmmState best = state;
    double best_score = std::max(inf_norm(state.r_primal), inf_norm(state.r_dual));

    while (true) {
      result.trace.push_back(make_trace_row(state));
      const double score = std::max(inf_norm(state.r_primal), inf_norm(state.r_dual));
      if (score < best_score) {
        best_score = score;
        best = state;
      }
      if (check_termination(state, settings)) return finish(SolveStatus::Solved, state);
      if (state.iteration >= settings.max_iterations)
        return finish(SolveStatus::MaxIterations, best);

      Eigen::VectorXd rho_next = policy.act(prob, state, settings)
                                     .cwiseMax(settings.rho_min)
                                     .cwiseMin(settings.rho_max);
      const double rel_change =
          ((rho_next - state.rho).cwiseAbs().cwiseQuotient(state.rho)).maxCoeff();
      if (rel_change > settings.refactor_tol) {
        state.rho = rho_next;
        fact = factorize_kkt(prob, state.rho, settings.sigma);
      }

      for (int k = 0; k < settings.check_interval; ++k) {
        admm_iteration(state, prob, fact, settings);
      }
      compute_residuals(state, prob);
    }
  } catch (const SingularSystem&) {
    return finish(SolveStatus::NumericalFailure, state);
  }
}

}  // namespace adaptqp

#endif
