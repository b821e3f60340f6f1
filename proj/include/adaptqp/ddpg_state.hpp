#ifndef ADAPTQP_DDPG_STATE_HPP
#define ADAPTQP_DDPG_STATE_HPP

// Full training-state serialization so an interrupted run resumed from a
// state file is bit-identical to the uninterrupted run: parameter stores,
// both RNG streams, the replay buffer (graphs deduplicated) and the
// mid-episode environment.

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "adaptqp/ddpg.hpp"

namespace adaptqp {

struct TrainStateSerializer {
  static constexpr char kMagic[9] = "AQPSTAT1";

  template <class S>
  static void save(const DdpgTrainer<S>& trainer, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot open " + path + " for writing");
    out.write(kMagic, 8);
    ckpt_detail::write_u32(out, sizeof(S));
    ckpt_detail::write_i64(out, trainer.updates_done_);
    ckpt_detail::write_u32(out, trainer.episode_live_ ? 1 : 0);
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(trainer.episode_lengths_.size()));
    for (int len : trainer.episode_lengths_) ckpt_detail::write_i64(out, len);

    write_store(out, trainer.agent_.actor_store());
    write_store(out, trainer.agent_.critic_store());
    write_store(out, trainer.agent_.target_actor_store());
    write_store(out, trainer.agent_.target_critic_store());

    trainer.sample_rng_.save(out);
    trainer.noise_rng_.save(out);
    const_cast<ReplayBuffer&>(trainer.buffer_).rng().save(out);

    // graph table shared by the buffer and the live environment
    std::map<const HeteroGraph*, std::uint32_t> ids;
    std::vector<const HeteroGraph*> table;
    auto intern = [&](const std::shared_ptr<const HeteroGraph>& g) {
      auto [it, fresh] = ids.try_emplace(g.get(), static_cast<std::uint32_t>(table.size()));
      if (fresh) table.push_back(g.get());
      return it->second;
    };
    std::vector<std::vector<std::uint32_t>> obs_ids, next_ids;
    for (const Transition& t : trainer.buffer_.storage()) {
      std::vector<std::uint32_t> a, b;
      for (const auto& g : t.obs) a.push_back(intern(g));
      for (const auto& g : t.next_obs) b.push_back(intern(g));
      obs_ids.push_back(std::move(a));
      next_ids.push_back(std::move(b));
    }
    std::vector<std::uint32_t> env_ids;
    for (const auto& g : trainer.env_.history_) env_ids.push_back(intern(g));

    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(table.size()));
    for (const HeteroGraph* g : table) write_graph(out, *g);

    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(trainer.buffer_.storage().size()));
    ckpt_detail::write_i64(out, static_cast<std::int64_t>(trainer.buffer_.next_slot()));
    for (std::size_t i = 0; i < trainer.buffer_.storage().size(); ++i) {
      const Transition& t = trainer.buffer_.storage()[i];
      write_ids(out, obs_ids[i]);
      write_vec(out, t.action);
      const double reward = t.reward;
      out.write(reinterpret_cast<const char*>(&reward), sizeof(reward));
      write_ids(out, next_ids[i]);
      ckpt_detail::write_u32(out, t.done ? 1 : 0);
    }

    // environment
    write_problem(out, trainer.env_.prob_);
    write_admm_state(out, trainer.env_.state_);
    ckpt_detail::write_i64(out, trainer.env_.steps_);
    ckpt_detail::write_u32(out, trainer.env_.done_ ? 1 : 0);
    ckpt_detail::write_u32(out, trainer.env_.live_ ? 1 : 0);
    write_ids(out, env_ids);
  }

  template <class S>
  static void load(DdpgTrainer<S>& trainer, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::string(magic, 8) != std::string(kMagic, 8))
      throw InvalidArgument("bad training-state magic in " + path);
    if (ckpt_detail::read_u32(in) != sizeof(S))
      throw InvalidArgument("training-state scalar width mismatch");
    trainer.updates_done_ = static_cast<int>(ckpt_detail::read_i64(in));
    trainer.episode_live_ = ckpt_detail::read_u32(in) != 0;
    trainer.episode_lengths_.resize(ckpt_detail::read_u32(in));
    for (int& len : trainer.episode_lengths_) len = static_cast<int>(ckpt_detail::read_i64(in));

    read_store(in, trainer.agent_.actor_store());
    read_store(in, trainer.agent_.critic_store());
    read_store(in, trainer.agent_.target_actor_store());
    read_store(in, trainer.agent_.target_critic_store());

    trainer.sample_rng_.load(in);
    trainer.noise_rng_.load(in);
    trainer.buffer_.rng().load(in);

    const std::uint32_t n_graphs = ckpt_detail::read_u32(in);
    std::vector<std::shared_ptr<const HeteroGraph>> table(n_graphs);
    for (std::uint32_t i = 0; i < n_graphs; ++i) {
      table[i] = std::make_shared<HeteroGraph>(read_graph(in));
    }

    const std::uint32_t n_transitions = ckpt_detail::read_u32(in);
    const std::size_t next_slot = static_cast<std::size_t>(ckpt_detail::read_i64(in));
    std::vector<Transition> storage(n_transitions);
    for (Transition& t : storage) {
      for (std::uint32_t id : read_ids(in)) t.obs.push_back(table[id]);
      t.action = read_vec(in);
      in.read(reinterpret_cast<char*>(&t.reward), sizeof(t.reward));
      for (std::uint32_t id : read_ids(in)) t.next_obs.push_back(table[id]);
      t.done = ckpt_detail::read_u32(in) != 0;
    }
    trainer.buffer_.restore(std::move(storage), next_slot);

    trainer.env_.prob_ = read_problem(in);
    trainer.env_.state_ = read_admm_state(in);
    trainer.env_.steps_ = static_cast<int>(ckpt_detail::read_i64(in));
    trainer.env_.done_ = ckpt_detail::read_u32(in) != 0;
    trainer.env_.live_ = ckpt_detail::read_u32(in) != 0;
    trainer.env_.history_.clear();
    for (std::uint32_t id : read_ids(in)) trainer.env_.history_.push_back(table[id]);
    if (trainer.env_.live_) {
      trainer.env_.fact_ = std::make_unique<KktFactorization>(
          trainer.env_.prob_, trainer.env_.state_.rho, trainer.env_.config_.settings.sigma);
    }
  }

 private:
  template <class S>
  static void write_store(std::ostream& out, const ParamStore<S>& store) {
    ckpt_detail::write_i64(out, store.adam_steps());
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, e] : store.entries()) {
      ckpt_detail::write_string(out, name);
      ckpt_detail::write_mat(out, e.value);
      ckpt_detail::write_mat(out, e.adam_m);
      ckpt_detail::write_mat(out, e.adam_v);
    }
  }

  template <class S>
  static void read_store(std::istream& in, ParamStore<S>& store) {
    store.set_adam_steps(ckpt_detail::read_i64(in));
    const std::uint32_t count = ckpt_detail::read_u32(in);
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::string name = ckpt_detail::read_string(in);
      auto& e = store.entries().at(name);
      e.value = ckpt_detail::read_mat<S>(in);
      e.adam_m = ckpt_detail::read_mat<S>(in);
      e.adam_v = ckpt_detail::read_mat<S>(in);
    }
  }

  static void write_ids(std::ostream& out, const std::vector<std::uint32_t>& ids) {
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(ids.size()));
    for (std::uint32_t id : ids) ckpt_detail::write_u32(out, id);
  }

  static std::vector<std::uint32_t> read_ids(std::istream& in) {
    std::vector<std::uint32_t> ids(ckpt_detail::read_u32(in));
    for (auto& id : ids) id = ckpt_detail::read_u32(in);
    return ids;
  }

  static void write_vec(std::ostream& out, const Eigen::VectorXd& v) {
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(double) * v.size()));
  }

  static Eigen::VectorXd read_vec(std::istream& in) {
    Eigen::VectorXd v(ckpt_detail::read_u32(in));
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
    return v;
  }

  static void write_dense(std::ostream& out, const Eigen::MatrixXd& m) {
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(m.rows()));
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
  }

  static Eigen::MatrixXd read_dense(std::istream& in) {
    const std::uint32_t rows = ckpt_detail::read_u32(in);
    const std::uint32_t cols = ckpt_detail::read_u32(in);
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    return m;
  }

  static void write_sparse(std::ostream& out, const SparseMatrix& m) {
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(m.rows()));
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(m.cols()));
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(m.nnz()));
    for (const Triplet& t : m.entries()) {
      ckpt_detail::write_u32(out, static_cast<std::uint32_t>(t.row));
      ckpt_detail::write_u32(out, static_cast<std::uint32_t>(t.col));
      out.write(reinterpret_cast<const char*>(&t.value), sizeof(double));
    }
  }

  static SparseMatrix read_sparse(std::istream& in) {
    const int rows = static_cast<int>(ckpt_detail::read_u32(in));
    const int cols = static_cast<int>(ckpt_detail::read_u32(in));
    const std::uint32_t nnz = ckpt_detail::read_u32(in);
    std::vector<Triplet> entries(nnz);
    for (Triplet& t : entries) {
      t.row = static_cast<int>(ckpt_detail::read_u32(in));
      t.col = static_cast<int>(ckpt_detail::read_u32(in));
      in.read(reinterpret_cast<char*>(&t.value), sizeof(double));
    }
    return SparseMatrix(rows, cols, std::move(entries));
  }

  static void write_problem(std::ostream& out, const QpProblem& prob) {
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(prob.n));
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(prob.m));
    write_sparse(out, prob.p);
    write_vec(out, prob.q);
    write_sparse(out, prob.a);
    write_vec(out, prob.l);
    write_vec(out, prob.u);
    ckpt_detail::write_u32(out, prob.scaled ? 1 : 0);
    out.write(reinterpret_cast<const char*>(&prob.obj_scaler), sizeof(double));
    write_vec(out, prob.row_scalers);
  }

  static QpProblem read_problem(std::istream& in) {
    QpProblem prob;
    prob.n = static_cast<int>(ckpt_detail::read_u32(in));
    prob.m = static_cast<int>(ckpt_detail::read_u32(in));
    prob.p = read_sparse(in);
    prob.q = read_vec(in);
    prob.a = read_sparse(in);
    prob.l = read_vec(in);
    prob.u = read_vec(in);
    prob.scaled = ckpt_detail::read_u32(in) != 0;
    in.read(reinterpret_cast<char*>(&prob.obj_scaler), sizeof(double));
    prob.row_scalers = read_vec(in);
    return prob;
  }

  static void write_admm_state(std::ostream& out, const AdmmState& s) {
    write_vec(out, s.x);
    write_vec(out, s.z);
    write_vec(out, s.y);
    write_vec(out, s.nu);
    write_vec(out, s.rho);
    ckpt_detail::write_i64(out, s.iteration);
    write_vec(out, s.r_primal);
    write_vec(out, s.r_dual);
    ckpt_detail::write_i64(out, s.residual_iteration);
  }

  static AdmmState read_admm_state(std::istream& in) {
    AdmmState s;
    s.x = read_vec(in);
    s.z = read_vec(in);
    s.y = read_vec(in);
    s.nu = read_vec(in);
    s.rho = read_vec(in);
    s.iteration = static_cast<int>(ckpt_detail::read_i64(in));
    s.r_primal = read_vec(in);
    s.r_dual = read_vec(in);
    s.residual_iteration = static_cast<int>(ckpt_detail::read_i64(in));
    return s;
  }

  static void write_graph(std::ostream& out, const HeteroGraph& g) {
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(g.n_primal));
    ckpt_detail::write_u32(out, static_cast<std::uint32_t>(g.n_dual));
    ckpt_detail::write_u32(out, g.include_rho ? 1 : 0);
    write_dense(out, g.primal_features);
    write_dense(out, g.dual_features);
    auto edges = [&out](const std::vector<GraphEdge>& es, const Eigen::MatrixXd& feats) {
      ckpt_detail::write_u32(out, static_cast<std::uint32_t>(es.size()));
      for (const GraphEdge& e : es) {
        ckpt_detail::write_u32(out, static_cast<std::uint32_t>(e.src));
        ckpt_detail::write_u32(out, static_cast<std::uint32_t>(e.dst));
      }
      write_dense(out, feats);
    };
    edges(g.p2p_edges, g.p2p_feat);
    edges(g.p2d_edges, g.p2d_feat);
    edges(g.d2p_edges, g.d2p_feat);
  }

  static HeteroGraph read_graph(std::istream& in) {
    HeteroGraph g;
    g.n_primal = static_cast<int>(ckpt_detail::read_u32(in));
    g.n_dual = static_cast<int>(ckpt_detail::read_u32(in));
    g.include_rho = ckpt_detail::read_u32(in) != 0;
    g.primal_features = read_dense(in);
    g.dual_features = read_dense(in);
    auto edges = [&in](std::vector<GraphEdge>& es, Eigen::MatrixXd& feats) {
      es.resize(ckpt_detail::read_u32(in));
      for (GraphEdge& e : es) {
        e.src = static_cast<int>(ckpt_detail::read_u32(in));
        e.dst = static_cast<int>(ckpt_detail::read_u32(in));
      }
      feats = read_dense(in);
    };
    edges(g.p2p_edges, g.p2p_feat);
    edges(g.p2d_edges, g.p2d_feat);
    edges(g.d2p_edges, g.d2p_feat);
    return g;
  }
};

template <class S>
void DdpgTrainer<S>::save_state(const std::string& path) const {
  TrainStateSerializer::save(*this, path);
}

template <class S>
void DdpgTrainer<S>::load_state(const std::string& path) {
  TrainStateSerializer::load(*this, path);
}

}  // namespace adaptqp

#endif
