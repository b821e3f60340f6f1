#ifndef ADAPTQP_ENV_HPP
#define ADAPTQP_ENV_HPP

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "adaptqp/admm.hpp"
#include "adaptqp/errors.hpp"
#include "adaptqp/graph.hpp"
#include "adaptqp/problem.hpp"
#include "adaptqp/scaling.hpp"

namespace adaptqp {

struct EnvConfig {
  int step_interval = 10;  // ADMM iterations per MDP step
  int max_mdp_steps = 500;
  double gamma = 0.99;
  int history_len = 3;
  AdmmSettings settings;

  void check() const {
    if (step_interval < 1) throw InvalidArgument("step_interval must be >= 1");
    if (gamma < 0.0 || gamma >= 1.0) throw InvalidArgument("gamma must be in [0, 1)");
    if (history_len < 1) throw InvalidArgument("history_len must be >= 1");
    settings.check();
  }
};

/// MDP wrapper over one ADMM solve: actions are rho vectors, a step runs
/// step_interval iterations, reward is 0 on convergence and -1 otherwise.
class QpEnv {
 public:
  explicit QpEnv(EnvConfig config) : config_(std::move(config)) { config_.check(); }

  Observation reset(const QpProblem& problem) {
    prob_ = problem.scaled ? problem : preprocess(problem);
    state_ = init_state(prob_, config_.settings);
    fact_ = std::make_unique<KktFactorization>(prob_, state_.rho, config_.settings.sigma);
    compute_residuals(state_, prob_);
    history_.clear();
    push_observation();
    steps_ = 0;
    done_ = false;
    live_ = true;
    return observation();
  }

  struct StepResult {
    Observation next_obs;
    double reward = -1.0;
    bool done = false;
    bool converged = false;
  };

  StepResult step(const Eigen::VectorXd& rho_action) {
    if (!live_ || done_) throw EpisodeFinished("episode is finished; call reset");
    if (rho_action.size() != prob_.m) throw ShapeMismatch("action must have length m");

    const Eigen::VectorXd rho = rho_action.cwiseMax(config_.settings.rho_min)
                                    .cwiseMin(config_.settings.rho_max);
    const double rel_change =
        ((rho - state_.rho).cwiseAbs().cwiseQuotient(state_.rho)).maxCoeff();
    if (rel_change > config_.settings.refactor_tol) {
      state_.rho = rho;
      fact_ = std::make_unique<KktFactorization>(prob_, state_.rho, config_.settings.sigma);
    }
    for (int k = 0; k < config_.step_interval; ++k) {
      admm_iteration(state_, prob_, *fact_, config_.settings);
    }
    compute_residuals(state_, prob_);
    push_observation();
    ++steps_;

    StepResult result;
    result.converged = check_termination(state_, config_.settings);
    done_ = result.converged || steps_ >= config_.max_mdp_steps;
    result.done = done_;
    result.reward = result.converged ? 0.0 : -1.0;
    result.next_obs = observation();
    return result;
  }

  Observation observation() const {
    Observation obs;
    obs.reserve(config_.history_len);
    const int pad = config_.history_len - static_cast<int>(history_.size());
    for (int i = 0; i < pad; ++i) obs.push_back(history_.front());
    for (const auto& g : history_) obs.push_back(g);
    return obs;
  }

  const QpProblem& problem() const { return prob_; }
  const AdmmState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }
  int mdp_steps() const { return steps_; }
  bool done() const { return done_; }
  int total_iterations() const { return state_.iteration; }

  friend struct TrainStateSerializer;

 private:
  void push_observation() {
    history_.push_back(std::make_shared<HeteroGraph>(
        build_graph(prob_, state_, config_.settings, /*include_rho=*/true)));
    if (static_cast<int>(history_.size()) > config_.history_len) history_.erase(history_.begin());
  }

  EnvConfig config_;
  QpProblem prob_;
  AdmmState state_;
  std::unique_ptr<KktFactorization> fact_;
  std::vector<std::shared_ptr<const HeteroGraph>> history_;
  int steps_ = 0;
  bool done_ = false;
  bool live_ = false;
};

}  // namespace adaptqp

#endif
