#ifndef ADAPTQP_POLICY_HPP
#define ADAPTQP_POLICY_HPP

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptqp/admm.hpp"
#include "adaptqp/errors.hpp"
#include "adaptqp/graph.hpp"
#include "adaptqp/nets.hpp"
#include "adaptqp/nn.hpp"
#include "adaptqp/rng.hpp"

namespace adaptqp {

/// Constant per-constraint step size; the non-adaptive baseline.
class FixedRhoPolicy final : public RhoPolicy {
 public:
  explicit FixedRhoPolicy(double rho0, double rho_min = 1e-6, double rho_max = 1e6) : rho0_(rho0) {
    if (!(rho0 >= rho_min && rho0 <= rho_max))
      throw InvalidArgument("rho0 outside [rho_min, rho_max]");
  }

  Eigen::VectorXd act(const QpProblem& prob, const AdmmState&, const AdmmSettings& settings) override {
    return Eigen::VectorXd::Constant(prob.m, rho0_)
        .cwiseMax(settings.rho_min)
        .cwiseMin(settings.rho_max);
  }

 private:
  double rho0_;
};

/// Residual-balancing heuristic: scale rho by sqrt(|r_primal| / |r_dual|),
/// applied only when the ratio leaves the hysteresis band [1/5, 5].
class HeuristicRhoPolicy final : public RhoPolicy {
 public:
  Eigen::VectorXd act(const QpProblem&, const AdmmState& state, const AdmmSettings& settings) override {
    const double rp = inf_norm(state.r_primal);
    const double rd = std::max(inf_norm(state.r_dual), 1e-12);
    const double ratio = rp / rd;
    if (ratio > 5.0 || ratio < 0.2) {
      return (state.rho * std::sqrt(ratio))
          .cwiseMax(settings.rho_min)
          .cwiseMin(settings.rho_max);
    }
    return state.rho;
  }
};

inline const MlpSpec kRlqpNetSpec{6, {64, 32}, 1, OutputActivation::ExpTanh};

template <class S>
void init_rlqp_params(ParamStore<S>& store, Rng& rng) {
  init_mlp(store, "rlqp", kRlqpNetSpec, rng);
}

/// Per-constraint features of the flat baseline:
/// [log10 |r_p|_inf, log10 |r_d|_inf, y_m, rho_m, slack_m, z_m - (Ax)_m]
template <class S>
typename Tape<S>::Mat rlqp_features(const QpProblem& prob, const AdmmState& state) {
  if (!state.residuals_current()) throw StaleResiduals("rlqp features need current residuals");
  typename Tape<S>::Mat f(6, prob.m);
  const double rp_log = graph_detail::log10_guarded(inf_norm(state.r_primal));
  const double rd_log = graph_detail::log10_guarded(inf_norm(state.r_dual));
  for (int j = 0; j < prob.m; ++j) {
    f(0, j) = static_cast<S>(rp_log);
    f(1, j) = static_cast<S>(rd_log);
    f(2, j) = static_cast<S>(state.y[j]);
    f(3, j) = static_cast<S>(state.rho[j]);
    f(4, j) = static_cast<S>(graph_detail::bounded_slack(state.z[j], prob.l[j], prob.u[j]));
    f(5, j) = static_cast<S>(-state.r_primal[j]);  // z - Ax
  }
  return f;
}

/// One shared MLP applied per constraint; output is log10(rho).
template <class S>
Eigen::VectorXd rlqp_style_act(ParamStore<S>& store, const QpProblem& prob, const AdmmState& state,
                               const AdmmSettings& settings) {
  Tape<S> tape;
  auto out = mlp_forward(tape, store, "rlqp", kRlqpNetSpec, tape.constant(rlqp_features<S>(prob, state)));
  Eigen::VectorXd rho(prob.m);
  for (int j = 0; j < prob.m; ++j) {
    rho[j] = std::pow(10.0, static_cast<double>(tape.value(out)(0, j)));
  }
  return rho.cwiseMax(settings.rho_min).cwiseMin(settings.rho_max);
}

template <class S>
class RlqpStylePolicy final : public RhoPolicy {
 public:
  explicit RlqpStylePolicy(std::shared_ptr<ParamStore<S>> store) : store_(std::move(store)) {}

  Eigen::VectorXd act(const QpProblem& prob, const AdmmState& state,
                      const AdmmSettings& settings) override {
    return rlqp_style_act(*store_, prob, state, settings);
  }

 private:
  std::shared_ptr<ParamStore<S>> store_;
};

/// Pads a history to the requested length by repeating its oldest entry.
inline Observation pad_history(const Observation& history, int length) {
  if (history.empty()) throw HistoryTooShort("history must hold at least one observation");
  Observation out;
  out.reserve(length);
  for (int i = 0; i < length - static_cast<int>(history.size()); ++i) out.push_back(history.front());
  for (const auto& g : history) out.push_back(g);
  if (static_cast<int>(out.size()) > length) {
    out.erase(out.begin(), out.begin() + (out.size() - length));
  }
  return out;
}

template <class S>
GraphBatch<S> single_graph_batch(const Observation& history, int history_len) {
  const Observation padded = pad_history(history, history_len);
  std::vector<const HeteroGraph*> ptrs;
  ptrs.reserve(padded.size());
  for (const auto& g : padded) ptrs.push_back(g.get());
  return make_graph_batch<S>({ptrs});
}

/// Runs the actor on one observation history; returns rho clamped to the
/// settings box. The current (rho-free) graph is derived from the newest
/// observation, which was built from the same state.
template <class S>
Eigen::VectorXd ca_admm_act(const ContextActor<S>& actor, ParamStore<S>& store,
                            const Observation& history, int history_len,
                            const AdmmSettings& settings) {
  GraphBatch<S> batch = single_graph_batch<S>(history, history_len);
  Tape<S> tape;
  auto log_rho = actor.forward(tape, store, batch);
  Eigen::VectorXd rho(batch.idx.n_dual);
  for (int j = 0; j < batch.idx.n_dual; ++j) {
    rho[j] = std::pow(10.0, static_cast<double>(tape.value(log_rho)(0, j)));
  }
  return rho.cwiseMax(settings.rho_min).cwiseMin(settings.rho_max);
}

/// Critic value for one observation/action pair; optionally returns the
/// gradient of Q with respect to the rho action.
template <class S>
double ca_admm_q(const ContextCritic<S>& critic, ParamStore<S>& store, const Observation& history,
                 int history_len, const Eigen::VectorXd& rho_action,
                 Eigen::VectorXd* grad_rho = nullptr) {
  GraphBatch<S> batch = single_graph_batch<S>(history, history_len);
  if (rho_action.size() != batch.idx.n_dual)
    throw ShapeMismatch("rho_action must have one entry per constraint");
  Tape<S> tape;
  typename Tape<S>::Mat action(1, batch.idx.n_dual);
  for (int j = 0; j < batch.idx.n_dual; ++j) action(0, j) = static_cast<S>(rho_action[j]);
  auto action_var = tape.constant(action);
  auto q = critic.forward(tape, store, batch, action_var);
  const double value = static_cast<double>(tape.value(q)(0, 0));
  if (grad_rho) {
    tape.backward(q);
    grad_rho->resize(batch.idx.n_dual);
    for (int j = 0; j < batch.idx.n_dual; ++j) {
      (*grad_rho)[j] = static_cast<double>(tape.grad(action_var)(0, j));
    }
  }
  return value;
}

/// RhoPolicy adapter around the context actor: maintains the observation
/// history across check intervals and optionally explores in log10 space.
template <class S>
class ContextPolicy final : public RhoPolicy {
 public:
  ContextPolicy(std::shared_ptr<ParamStore<S>> store, int history_len = 3,
                double explore_sigma = 0.0, std::uint64_t noise_seed = 0)
      : store_(std::move(store)),
        history_len_(history_len),
        explore_sigma_(explore_sigma),
        noise_rng_(noise_seed) {
    if (history_len_ < 1) throw InvalidArgument("history_len must be >= 1");
  }

  void begin_episode(const QpProblem& prob, const AdmmState& state,
                     const AdmmSettings& settings) override {
    history_.clear();
    observe(prob, state, settings);
  }

  Eigen::VectorXd act(const QpProblem& prob, const AdmmState& state,
                      const AdmmSettings& settings) override {
    if (history_.empty() || state.iteration != last_observed_iteration_) {
      observe(prob, state, settings);
    }
    Eigen::VectorXd rho = ca_admm_act(actor_, *store_, history_, history_len_, settings);
    if (explore_sigma_ > 0.0) {
      for (int j = 0; j < rho.size(); ++j) {
        rho[j] = std::pow(10.0, std::log10(rho[j]) + noise_rng_.normal(0.0, explore_sigma_));
      }
      rho = rho.cwiseMax(settings.rho_min).cwiseMin(settings.rho_max);
    }
    return rho;
  }

  const ContextActor<S>& actor() const { return actor_; }

 private:
  void observe(const QpProblem& prob, const AdmmState& state, const AdmmSettings& settings) {
    history_.push_back(
        std::make_shared<HeteroGraph>(build_graph(prob, state, settings, /*include_rho=*/true)));
    if (static_cast<int>(history_.size()) > history_len_) history_.erase(history_.begin());
    last_observed_iteration_ = state.iteration;
  }

  ContextActor<S> actor_;
  std::shared_ptr<ParamStore<S>> store_;
  int history_len_;
  double explore_sigma_;
  Rng noise_rng_;
  Observation history_;
  int last_observed_iteration_ = -1;
};

}  // namespace adaptqp

#endif
