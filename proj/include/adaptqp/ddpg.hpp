#ifndef ADAPTQP_DDPG_HPP
#define ADAPTQP_DDPG_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptqp/env.hpp"
#include "adaptqp/errors.hpp"
#include "adaptqp/nets.hpp"
#include "adaptqp/policy.hpp"
#include "adaptqp/probgen.hpp"
#include "adaptqp/replay.hpp"

namespace adaptqp {

struct TrainConfig {
  EnvConfig env;

  Family family = Family::RandomQP;
  int n_min = 10;
  int n_max = 15;

  int updates = 2000;         // gradient updates ("epochs"); one per env step
  int batch_size = 128;
  double tau = 0.005;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double explore_sigma = 0.1;   // Gaussian noise in log10(rho) space
  int warmup_transitions = 500;
  std::size_t buffer_capacity = 50000;
  std::uint64_t seed = 0;

  int log_every = 50;
  int eval_every = 500;
  int eval_instances = 5;
  int checkpoint_every = 0;  // 0 disables periodic state dumps
  std::string checkpoint_prefix;

  void check() const {
    env.check();
    if (n_min < 1 || n_min > n_max) throw InvalidArgument("bad n range");
    if (updates < 0 || batch_size < 1) throw InvalidArgument("bad update/batch settings");
    if (tau <= 0.0 || tau > 1.0) throw InvalidArgument("tau must be in (0, 1]");
    if (checkpoint_every > 0 && checkpoint_every % log_every != 0)
      throw InvalidArgument("checkpoint_every must be a multiple of log_every");
  }
};

struct TrainLogRow {
  int epoch = 0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double mean_episode_len = 0.0;       // MDP steps per completed episode
  double eval_mean_iterations = -1.0;  // < 0 means "not evaluated this row"
};

/// theta_target <- tau * theta + (1 - tau) * theta_target
template <class S>
void polyak_update(ParamStore<S>& target, const ParamStore<S>& online, S tau) {
  target.polyak_from(online, tau);
}

/// Actor/critic pair with target networks and the batched DDPG update.
template <class S>
class DdpgAgent {
 public:
  explicit DdpgAgent(std::uint64_t init_seed, int history_len = 3)
      : history_len_(history_len) {
    Rng init_rng(init_seed);
    actor_.init(actor_store_, init_rng);
    critic_.init(critic_store_, init_rng);
    copy_structure(target_actor_store_, actor_store_);
    copy_structure(target_critic_store_, critic_store_);
  }

  Eigen::VectorXd act(const Observation& obs, const AdmmSettings& settings) {
    return ca_admm_act(actor_, actor_store_, obs, history_len_, settings);
  }

  Eigen::VectorXd act_noisy(const Observation& obs, const AdmmSettings& settings, double sigma,
                            Rng& noise_rng) {
    Eigen::VectorXd rho = act(obs, settings);
    for (int j = 0; j < rho.size(); ++j) {
      rho[j] = std::pow(10.0, std::log10(rho[j]) + noise_rng.normal(0.0, sigma));
    }
    return rho.cwiseMax(settings.rho_min).cwiseMin(settings.rho_max);
  }

  struct UpdateLosses {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
  };

  UpdateLosses update(const std::vector<const Transition*>& batch, double gamma, double tau,
                      double actor_lr, double critic_lr) {
    using Mat = typename Tape<S>::Mat;
    const S ln10 = S(std::log(10.0));
    const int b = static_cast<int>(batch.size());

    std::vector<std::vector<const HeteroGraph*>> hist_s, hist_s2;
    hist_s.reserve(b);
    hist_s2.reserve(b);
    int total_duals = 0;
    for (const Transition* t : batch) {
      std::vector<const HeteroGraph*> hs, hs2;
      for (const auto& g : t->obs) hs.push_back(g.get());
      for (const auto& g : t->next_obs) hs2.push_back(g.get());
      hist_s.push_back(std::move(hs));
      hist_s2.push_back(std::move(hs2));
      total_duals += static_cast<int>(t->action.size());
    }
    GraphBatch<S> bs = make_graph_batch<S>(hist_s);
    GraphBatch<S> bs2 = make_graph_batch<S>(hist_s2);

    // critic target y = r + gamma * (1 - done) * Q'(s', pi'(s'))
    Mat y(1, b);
    {
      Tape<S> tape;
      auto log_rho2 = target_actor_net().forward(tape, target_actor_store_, bs2);
      auto rho2 = tape.exp_op(tape.scale(log_rho2, ln10));
      auto q2 = target_critic_net().forward(tape, target_critic_store_, bs2, rho2);
      for (int i = 0; i < b; ++i) {
        const double bootstrap =
            batch[i]->done ? 0.0 : gamma * static_cast<double>(tape.value(q2)(0, i));
        y(0, i) = static_cast<S>(batch[i]->reward + bootstrap);
      }
    }

    UpdateLosses losses;
    {
      critic_store_.zero_grads();
      Tape<S> tape;
      Mat action_row(1, total_duals);
      int at = 0;
      for (const Transition* t : batch) {
        for (int j = 0; j < t->action.size(); ++j) action_row(0, at++) = static_cast<S>(t->action[j]);
      }
      auto q = critic_.forward(tape, critic_store_, bs, tape.constant(action_row));
      auto diff = tape.sub(q, tape.constant(y));
      auto loss = tape.mean_all(tape.mul(diff, diff));
      losses.critic_loss = static_cast<double>(tape.value(loss)(0, 0));
      tape.backward(loss);
      critic_store_.adam_step(S(critic_lr));
    }
    {
      actor_store_.zero_grads();
      critic_store_.zero_grads();
      Tape<S> tape;
      auto log_rho = actor_.forward(tape, actor_store_, bs);
      auto rho = tape.exp_op(tape.scale(log_rho, ln10));
      auto q = critic_.forward(tape, critic_store_, bs, rho);
      auto loss = tape.scale(tape.mean_all(q), S(-1));
      losses.actor_loss = static_cast<double>(tape.value(loss)(0, 0));
      tape.backward(loss);
      actor_store_.adam_step(S(actor_lr));
      critic_store_.zero_grads();  // actor pass must not leak into the critic
    }
    polyak_update(target_actor_store_, actor_store_, S(tau));
    polyak_update(target_critic_store_, critic_store_, S(tau));
    return losses;
  }

  ParamStore<S>& actor_store() { return actor_store_; }
  ParamStore<S>& critic_store() { return critic_store_; }
  ParamStore<S>& target_actor_store() { return target_actor_store_; }
  ParamStore<S>& target_critic_store() { return target_critic_store_; }
  const ParamStore<S>& actor_store() const { return actor_store_; }
  const ParamStore<S>& critic_store() const { return critic_store_; }
  const ParamStore<S>& target_actor_store() const { return target_actor_store_; }
  const ParamStore<S>& target_critic_store() const { return target_critic_store_; }
  const ContextActor<S>& actor_net() const { return actor_; }
  const ContextCritic<S>& critic_net() const { return critic_; }
  int history_len() const { return history_len_; }

 private:
  const ContextActor<S>& target_actor_net() const { return actor_; }    // same architecture,
  const ContextCritic<S>& target_critic_net() const { return critic_; }  // different store

  void copy_structure(ParamStore<S>& dst, const ParamStore<S>& src) {
    for (const auto& [name, e] : src.entries()) {
      dst.create(name, static_cast<int>(e.value.rows()), static_cast<int>(e.value.cols()));
    }
    dst.copy_values_from(src);
  }

  int history_len_;
  ContextActor<S> actor_{"actor"};
  ContextCritic<S> critic_{"critic"};
  ParamStore<S> actor_store_, critic_store_;
  ParamStore<S> target_actor_store_, target_critic_store_;
};

/// Deterministic greedy rollout; returns total ADMM iterations used.
template <class S>
int evaluate_episode(DdpgAgent<S>& agent, QpEnv& env, const QpProblem& problem) {
  Observation obs = env.reset(problem);
  while (!env.done()) {
    env.step(agent.act(obs, env.config().settings));
    obs = env.observation();
  }
  return env.total_iterations();
}

template <class S>
class DdpgTrainer {
 public:
  explicit DdpgTrainer(TrainConfig config)
      : config_(std::move(config)),
        agent_(config_.seed, config_.env.history_len),
        buffer_(config_.buffer_capacity, config_.seed + 1),
        sample_rng_(config_.seed + 2),
        noise_rng_(config_.seed + 3),
        env_(config_.env),
        eval_env_(config_.env) {
    config_.check();
  }

  using LogCallback = std::function<void(const TrainLogRow&)>;

  std::vector<TrainLogRow> train(const LogCallback& on_log = {}) {
    std::vector<TrainLogRow> log;
    if (updates_done_ >= config_.updates) return log;
    if (!episode_live_) start_episode();

    double critic_acc = 0.0, actor_acc = 0.0;
    int loss_count = 0;
    while (updates_done_ < config_.updates) {
      // one environment step
      Observation obs = env_.observation();
      const Eigen::VectorXd action =
          agent_.act_noisy(obs, config_.env.settings, config_.explore_sigma, noise_rng_);
      auto step = env_.step(action);
      Transition t;
      t.obs = std::move(obs);
      t.action = action;
      t.reward = step.reward;
      t.next_obs = step.next_obs;
      t.done = step.done;
      buffer_.push(std::move(t));
      if (step.done) {
        episode_lengths_.push_back(env_.mdp_steps());
        start_episode();
      }

      // one update per env step once warm
      if (buffer_.size() < static_cast<std::size_t>(config_.warmup_transitions)) continue;
      auto batch = buffer_.sample(config_.batch_size);
      auto losses = agent_.update(batch, config_.env.gamma, config_.tau, config_.actor_lr,
                                  config_.critic_lr);
      ++updates_done_;
      critic_acc += losses.critic_loss;
      actor_acc += losses.actor_loss;
      ++loss_count;

      const bool last = updates_done_ == config_.updates;
      if (updates_done_ % config_.log_every == 0 || last) {
        TrainLogRow row;
        row.epoch = updates_done_;
        row.critic_loss = critic_acc / std::max(1, loss_count);
        row.actor_loss = actor_acc / std::max(1, loss_count);
        double mean_len = 0.0;
        for (int len : episode_lengths_) mean_len += len;
        row.mean_episode_len =
            episode_lengths_.empty() ? 0.0 : mean_len / episode_lengths_.size();
        if ((config_.eval_every > 0 && updates_done_ % config_.eval_every == 0) || last) {
          row.eval_mean_iterations = evaluate();
        }
        log.push_back(row);
        if (on_log) on_log(row);
        critic_acc = actor_acc = 0.0;
        loss_count = 0;
        episode_lengths_.clear();
      }
      if (config_.checkpoint_every > 0 && !config_.checkpoint_prefix.empty() &&
          updates_done_ % config_.checkpoint_every == 0) {
        save_state(config_.checkpoint_prefix + ".state");
      }
    }
    return log;
  }

  double evaluate() {
    Rng eval_rng(config_.seed + 10007);
    double total = 0.0;
    for (int i = 0; i < config_.eval_instances; ++i) {
      GeneratorSpec spec;
      spec.family = config_.family;
      spec.n = eval_rng.int_range(config_.n_min, config_.n_max);
      spec.seed = eval_rng.raw();
      total += evaluate_episode(agent_, eval_env_, generate(spec));
    }
    return total / config_.eval_instances;
  }

  DdpgAgent<S>& agent() { return agent_; }
  const TrainConfig& config() const { return config_; }
  int updates_done() const { return updates_done_; }

  void save_state(const std::string& path) const;
  void load_state(const std::string& path);

 private:
  void start_episode() {
    GeneratorSpec spec;
    spec.family = config_.family;
    spec.n = sample_rng_.int_range(config_.n_min, config_.n_max);
    spec.seed = sample_rng_.raw();
    env_.reset(generate(spec));
    episode_live_ = true;
  }

  TrainConfig config_;
  DdpgAgent<S> agent_;
  ReplayBuffer buffer_;
  Rng sample_rng_;
  Rng noise_rng_;
  QpEnv env_;
  QpEnv eval_env_;
  int updates_done_ = 0;
  bool episode_live_ = false;
  std::vector<int> episode_lengths_;

  friend struct TrainStateSerializer;
};

}  // namespace adaptqp

#include "adaptqp/ddpg_state.hpp"

#endif
