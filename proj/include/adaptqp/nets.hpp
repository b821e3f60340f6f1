#ifndef ADAPTQP_NETS_HPP
#define ADAPTQP_NETS_HPP

#include <string>
#include <utility>
#include <vector>

#include "adaptqp/hga.hpp"
#include "adaptqp/nn.hpp"

namespace adaptqp {

/// Observation batch laid out for the networks: one disjoint-union index over
/// the current graphs plus stacked node features for each history step.
/// Histories are given oldest first; the newest entry is the current state.
template <class S>
struct GraphBatch {
  using Mat = typename Tape<S>::Mat;

  BatchedGraphs<S> idx;
  std::vector<Mat> hist_primal;  // history_len entries, 3 x N
  std::vector<Mat> hist_dual;    // history_len entries, 8 x M (rho included)
  Mat current_primal;            // 3 x N
  Mat current_dual;              // 7 x M (rho stripped)
};

template <class S>
GraphBatch<S> make_graph_batch(const std::vector<std::vector<const HeteroGraph*>>& histories) {
  if (histories.empty() || histories[0].empty())
    throw InvalidArgument("make_graph_batch: empty batch");
  const std::size_t len = histories[0].size();
  GraphBatch<S> batch;
  std::vector<const HeteroGraph*> newest;
  newest.reserve(histories.size());
  for (const auto& h : histories) {
    if (h.size() != len) throw ShapeMismatch("make_graph_batch: uneven history lengths");
    newest.push_back(h.back());
  }
  batch.idx = BatchedGraphs<S>::build(newest);
  for (std::size_t step = 0; step < len; ++step) {
    std::vector<const HeteroGraph*> at_step;
    at_step.reserve(histories.size());
    for (const auto& h : histories) at_step.push_back(h[step]);
    batch.hist_primal.push_back(stack_primal_features<S>(at_step));
    batch.hist_dual.push_back(stack_dual_features<S>(at_step, /*drop_rho=*/false));
  }
  batch.current_primal = stack_primal_features<S>(newest);
  batch.current_dual = stack_dual_features<S>(newest, /*drop_rho=*/true);
  return batch;
}

/// HGA stack + GRU over the observation history, producing a per-node
/// temporal context vector. The same GRU cell runs on primal and dual node
/// embeddings (both are embed-sized after the stack).
template <class S>
class ContextEncoder {
 public:
  using Var = typename Tape<S>::Var;

  ContextEncoder(std::string prefix, int n_layers = 2) : prefix_(std::move(prefix)) {
    layers_.emplace_back(prefix_ + ".hga0", HgaLayerDims{3, 8, 8});
    for (int i = 1; i < n_layers; ++i) {
      layers_.emplace_back(prefix_ + ".hga" + std::to_string(i), HgaLayerDims{8, 8, 8});
    }
  }

  void init(ParamStore<S>& store, Rng& rng) const {
    for (const auto& layer : layers_) layer.init(store, rng);
    init_gru(store, prefix_ + ".gru", gru_, rng);
  }

  std::pair<Var, Var> encode(Tape<S>& tape, ParamStore<S>& store, const GraphBatch<S>& batch) const {
    using Mat = typename Tape<S>::Mat;
    Var ctx_p = tape.constant(Mat::Zero(gru_.hidden_dim, batch.idx.n_primal));
    Var ctx_d = tape.constant(Mat::Zero(gru_.hidden_dim, batch.idx.n_dual));
    for (std::size_t step = 0; step < batch.hist_primal.size(); ++step) {
      Var p = tape.constant(batch.hist_primal[step]);
      Var d = tape.constant(batch.hist_dual[step]);
      for (const auto& layer : layers_) std::tie(p, d) = layer.forward(tape, store, batch.idx, p, d);
      ctx_p = gru_step(tape, store, prefix_ + ".gru", gru_, p, ctx_p);
      ctx_d = gru_step(tape, store, prefix_ + ".gru", gru_, d, ctx_d);
    }
    return {ctx_p, ctx_d};
  }

 private:
  std::string prefix_;
  std::vector<HgaLayer<S>> layers_;
  GruSpec gru_{8, 8};
};

/// Policy network: context encoder, one HGA layer over the current graph with
/// the context concatenated node-wise, and a per-dual-node head emitting
/// log10(rho) through the bounded ExpTanh activation.
template <class S>
class ContextActor {
 public:
  using Var = typename Tape<S>::Var;

  explicit ContextActor(std::string prefix = "actor")
      : prefix_(std::move(prefix)),
        encoder_(prefix_ + ".enc"),
        policy_layer_(prefix_ + ".pol", HgaLayerDims{3 + 8, 7 + 8, 8}),
        head_{8, {64, 32}, 1, OutputActivation::ExpTanh} {}

  void init(ParamStore<S>& store, Rng& rng) const {
    encoder_.init(store, rng);
    policy_layer_.init(store, rng);
    init_mlp(store, prefix_ + ".head", head_, rng);
  }

  /// log10(rho) per dual node, shape 1 x M
  Var forward(Tape<S>& tape, ParamStore<S>& store, const GraphBatch<S>& batch,
              HgaAttention* capture = nullptr) const {
    auto [ctx_p, ctx_d] = encoder_.encode(tape, store, batch);
    Var in_p = tape.concat_rows({tape.constant(batch.current_primal), ctx_p});
    Var in_d = tape.concat_rows({tape.constant(batch.current_dual), ctx_d});
    auto [h_p, h_d] = policy_layer_.forward(tape, store, batch.idx, in_p, in_d, capture);
    return mlp_forward(tape, store, prefix_ + ".head", head_, h_d);
  }

 private:
  std::string prefix_;
  ContextEncoder<S> encoder_;
  HgaLayer<S> policy_layer_;
  MlpSpec head_;
};

/// Action-value network: same encoder shape, the action appended to the dual
/// features, and a weighted-sum/min/max readout into a scalar head.
template <class S>
class ContextCritic {
 public:
  using Var = typename Tape<S>::Var;

  explicit ContextCritic(std::string prefix = "critic")
      : prefix_(std::move(prefix)),
        encoder_(prefix_ + ".enc"),
        policy_layer_(prefix_ + ".pol", HgaLayerDims{3 + 8, 7 + 1 + 8, 8}),
        gate_{8, {16}, 1},
        head_{24, {64, 32}, 1, OutputActivation::Identity} {}

  void init(ParamStore<S>& store, Rng& rng) const {
    encoder_.init(store, rng);
    policy_layer_.init(store, rng);
    init_mlp(store, prefix_ + ".gate", gate_, rng);
    init_mlp(store, prefix_ + ".head", head_, rng);
  }

  /// Q values per graph, shape 1 x n_graphs; differentiable in rho_action.
  Var forward(Tape<S>& tape, ParamStore<S>& store, const GraphBatch<S>& batch, Var rho_action,
              HgaAttention* capture = nullptr) const {
    if (tape.value(rho_action).rows() != 1 ||
        tape.value(rho_action).cols() != batch.idx.n_dual)
      throw ShapeMismatch("critic: rho_action must be 1 x n_dual");
    auto [ctx_p, ctx_d] = encoder_.encode(tape, store, batch);
    Var in_p = tape.concat_rows({tape.constant(batch.current_primal), ctx_p});
    Var in_d = tape.concat_rows({tape.constant(batch.current_dual), rho_action, ctx_d});
    auto [h_p, h_d] = policy_layer_.forward(tape, store, batch.idx, in_p, in_d, capture);

    Var all = tape.concat_cols({h_p, h_d});
    std::vector<int> ids = batch.idx.primal_graph;
    ids.insert(ids.end(), batch.idx.dual_graph.begin(), batch.idx.dual_graph.end());
    Var gate_logits = mlp_forward(tape, store, prefix_ + ".gate", gate_, all);
    Var weights = tape.segment_softmax(gate_logits, ids, batch.idx.n_graphs);
    Var wsum = tape.segment_sum(tape.colscale(all, weights), ids, batch.idx.n_graphs);
    Var mn = tape.segment_min(all, ids, batch.idx.n_graphs);
    Var mx = tape.segment_max(all, ids, batch.idx.n_graphs);
    Var readout = tape.concat_rows({wsum, mn, mx});
    return mlp_forward(tape, store, prefix_ + ".head", head_, readout);
  }

 private:
  std::string prefix_;
  ContextEncoder<S> encoder_;
  HgaLayer<S> policy_layer_;
  MlpSpec gate_;
  MlpSpec head_;
};

}  // namespace adaptqp

#endif
