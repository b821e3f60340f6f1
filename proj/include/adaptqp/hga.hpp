#ifndef ADAPTQP_HGA_HPP
#define ADAPTQP_HGA_HPP

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "adaptqp/errors.hpp"
#include "adaptqp/graph.hpp"
#include "adaptqp/nn.hpp"
#include "adaptqp/tape.hpp"

namespace adaptqp {

/// Disjoint union of heterogeneous graphs, flattened into index arrays so all
/// per-edge and per-node network work runs as batched matrix ops. Node
/// features are kept separate (they change per history step; the structure
/// does not).
template <class S>
struct BatchedGraphs {
  using Mat = typename Tape<S>::Mat;

  int n_primal = 0;
  int n_dual = 0;
  int n_graphs = 0;

  std::vector<int> p2p_src, p2p_dst;
  std::vector<int> p2d_src, p2d_dst;
  std::vector<int> d2p_src, d2p_dst;
  Mat p2p_feat;  // 2 x |p2p|
  Mat p2d_feat;  // 1 x |p2d|
  Mat d2p_feat;  // 1 x |d2p|

  std::vector<int> primal_graph, dual_graph;  // graph id per node

  // incoming-type masks: primal row 0 = p2p, row 1 = d2p; dual row 0 = p2d
  Mat primal_type_mask;
  Mat dual_type_mask;
  std::vector<int> primal_isolated, dual_isolated;

  static BatchedGraphs build(const std::vector<const HeteroGraph*>& graphs) {
    BatchedGraphs out;
    out.n_graphs = static_cast<int>(graphs.size());
    std::size_t p2p_total = 0, p2d_total = 0, d2p_total = 0;
    for (const HeteroGraph* g : graphs) {
      out.n_primal += g->n_primal;
      out.n_dual += g->n_dual;
      p2p_total += g->p2p_edges.size();
      p2d_total += g->p2d_edges.size();
      d2p_total += g->d2p_edges.size();
    }
    out.p2p_feat.resize(2, p2p_total);
    out.p2d_feat.resize(1, p2d_total);
    out.d2p_feat.resize(1, d2p_total);
    out.primal_graph.reserve(out.n_primal);
    out.dual_graph.reserve(out.n_dual);

    int p_off = 0, d_off = 0, e_p2p = 0, e_p2d = 0, e_d2p = 0;
    for (int gi = 0; gi < out.n_graphs; ++gi) {
      const HeteroGraph& g = *graphs[gi];
      for (int i = 0; i < g.n_primal; ++i) out.primal_graph.push_back(gi);
      for (int j = 0; j < g.n_dual; ++j) out.dual_graph.push_back(gi);
      for (std::size_t e = 0; e < g.p2p_edges.size(); ++e) {
        out.p2p_src.push_back(p_off + g.p2p_edges[e].src);
        out.p2p_dst.push_back(p_off + g.p2p_edges[e].dst);
        out.p2p_feat(0, e_p2p) = static_cast<S>(g.p2p_feat(static_cast<int>(e), 0));
        out.p2p_feat(1, e_p2p) = static_cast<S>(g.p2p_feat(static_cast<int>(e), 1));
        ++e_p2p;
      }
      for (std::size_t e = 0; e < g.p2d_edges.size(); ++e) {
        out.p2d_src.push_back(p_off + g.p2d_edges[e].src);
        out.p2d_dst.push_back(d_off + g.p2d_edges[e].dst);
        out.p2d_feat(0, e_p2d) = static_cast<S>(g.p2d_feat(static_cast<int>(e), 0));
        ++e_p2d;
      }
      for (std::size_t e = 0; e < g.d2p_edges.size(); ++e) {
        out.d2p_src.push_back(d_off + g.d2p_edges[e].src);
        out.d2p_dst.push_back(p_off + g.d2p_edges[e].dst);
        out.d2p_feat(0, e_d2p) = static_cast<S>(g.d2p_feat(static_cast<int>(e), 0));
        ++e_d2p;
      }
      p_off += g.n_primal;
      d_off += g.n_dual;
    }

    out.primal_type_mask = Mat::Zero(2, out.n_primal);
    out.dual_type_mask = Mat::Zero(1, out.n_dual);
    for (int dst : out.p2p_dst) out.primal_type_mask(0, dst) = S(1);
    for (int dst : out.d2p_dst) out.primal_type_mask(1, dst) = S(1);
    for (int dst : out.p2d_dst) out.dual_type_mask(0, dst) = S(1);
    for (int i = 0; i < out.n_primal; ++i) {
      if (out.primal_type_mask.col(i).sum() == S(0)) out.primal_isolated.push_back(i);
    }
    for (int j = 0; j < out.n_dual; ++j) {
      if (out.dual_type_mask(0, j) == S(0)) out.dual_isolated.push_back(j);
    }
    return out;
  }
};

/// Stacks per-graph node features into a (dim x total_nodes) matrix,
/// optionally dropping the rho column of observed dual features.
template <class S>
typename Tape<S>::Mat stack_primal_features(const std::vector<const HeteroGraph*>& graphs) {
  int total = 0;
  for (const HeteroGraph* g : graphs) total += g->n_primal;
  typename Tape<S>::Mat out(3, total);
  int at = 0;
  for (const HeteroGraph* g : graphs) {
    out.middleCols(at, g->n_primal) = g->primal_features.transpose().template cast<S>();
    at += g->n_primal;
  }
  return out;
}

template <class S>
typename Tape<S>::Mat stack_dual_features(const std::vector<const HeteroGraph*>& graphs,
                                          bool drop_rho) {
  int total = 0;
  for (const HeteroGraph* g : graphs) total += g->n_dual;
  const int dim = drop_rho ? 7 : 8;
  typename Tape<S>::Mat out(dim, total);
  int at = 0;
  for (const HeteroGraph* g : graphs) {
    if (!g->include_rho) throw ShapeMismatch("stack_dual_features expects observed graphs (rho included)");
    if (drop_rho) {
      Eigen::MatrixXd f(g->n_dual, 7);
      f.leftCols(4) = g->dual_features.leftCols(4);
      f.rightCols(3) = g->dual_features.rightCols(3);
      out.middleCols(at, g->n_dual) = f.transpose().template cast<S>();
    } else {
      out.middleCols(at, g->n_dual) = g->dual_features.transpose().template cast<S>();
    }
    at += g->n_dual;
  }
  return out;
}

/// Attention weights captured from one HGA forward (normalization checks).
struct HgaAttention {
  Eigen::MatrixXd alpha_p2p, alpha_p2d, alpha_d2p;  // 1 x E each
  Eigen::MatrixXd beta_primal;                      // 2 x n_primal (p2p, d2p)
  Eigen::MatrixXd beta_dual;                        // 1 x n_dual (p2d)
};

struct HgaLayerDims {
  int primal_in = 3;
  int dual_in = 8;
  int embed = 8;
};

/// One heterogeneous graph attention layer.
///
/// Per edge type k: edge encoder E_k and scalar attention logit A_k over the
/// concatenated [h_src, h_dst, edge] features, softmax over in-neighbors,
/// node update V_k on [h_dst, message], then a shared scalar logit N mixing
/// the per-type updates with a second softmax. Nodes without incoming edges
/// keep a projected (first layer) or unchanged (embed-sized input) feature.
template <class S>
class HgaLayer {
 public:
  using Var = typename Tape<S>::Var;
  using Mat = typename Tape<S>::Mat;

  HgaLayer(std::string prefix, HgaLayerDims dims) : prefix_(std::move(prefix)), dims_(dims) {
    const int e = dims_.embed;
    p2p_e_ = {dims_.primal_in + dims_.primal_in + 2, {64, 16}, e};
    p2d_e_ = {dims_.primal_in + dims_.dual_in + 1, {64, 16}, e};
    d2p_e_ = {dims_.dual_in + dims_.primal_in + 1, {64, 16}, e};
    p2p_a_ = {p2p_e_.input_dim, {64, 16}, 1};
    p2d_a_ = {p2d_e_.input_dim, {64, 16}, 1};
    d2p_a_ = {d2p_e_.input_dim, {64, 16}, 1};
    p2p_v_ = {dims_.primal_in + e, {64, 16}, e};
    p2d_v_ = {dims_.dual_in + e, {64, 16}, e};
    d2p_v_ = {dims_.primal_in + e, {64, 16}, e};
    n_ = {e, {64, 32}, 1};
  }

  void init(ParamStore<S>& store, Rng& rng) const {
    init_mlp(store, prefix_ + ".p2p_e", p2p_e_, rng);
    init_mlp(store, prefix_ + ".p2d_e", p2d_e_, rng);
    init_mlp(store, prefix_ + ".d2p_e", d2p_e_, rng);
    init_mlp(store, prefix_ + ".p2p_a", p2p_a_, rng);
    init_mlp(store, prefix_ + ".p2d_a", p2d_a_, rng);
    init_mlp(store, prefix_ + ".d2p_a", d2p_a_, rng);
    init_mlp(store, prefix_ + ".p2p_v", p2p_v_, rng);
    init_mlp(store, prefix_ + ".p2d_v", p2d_v_, rng);
    init_mlp(store, prefix_ + ".d2p_v", d2p_v_, rng);
    init_mlp(store, prefix_ + ".n", n_, rng);
    if (dims_.primal_in != dims_.embed)
      store.create_uniform(prefix_ + ".p_iso", dims_.embed, dims_.primal_in, dims_.primal_in, rng);
    if (dims_.dual_in != dims_.embed)
      store.create_uniform(prefix_ + ".d_iso", dims_.embed, dims_.dual_in, dims_.dual_in, rng);
  }

  const HgaLayerDims& dims() const { return dims_; }

  std::pair<Var, Var> forward(Tape<S>& tape, ParamStore<S>& store, const BatchedGraphs<S>& g,
                              Var primal, Var dual, HgaAttention* capture = nullptr) const {
    if (tape.value(primal).rows() != dims_.primal_in || tape.value(dual).rows() != dims_.dual_in)
      throw ShapeMismatch(prefix_ + ": node feature dims");

    Var alpha_p2p, alpha_p2d, alpha_d2p;
    auto [h_p2p, d_p2p] = edge_type(tape, store, "p2p", p2p_e_, p2p_a_, p2p_v_, g.p2p_src,
                                    g.p2p_dst, g.p2p_feat, primal, primal, g.n_primal, alpha_p2p);
    auto [h_d2p, d_d2p] = edge_type(tape, store, "d2p", d2p_e_, d2p_a_, d2p_v_, g.d2p_src,
                                    g.d2p_dst, g.d2p_feat, dual, primal, g.n_primal, alpha_d2p);
    auto [h_p2d, d_p2d] = edge_type(tape, store, "p2d", p2d_e_, p2d_a_, p2d_v_, g.p2d_src,
                                    g.p2d_dst, g.p2d_feat, primal, dual, g.n_dual, alpha_p2d);

    // type attention over edge types arriving at each destination
    Var beta_p = tape.masked_row_softmax(tape.concat_rows({d_p2p, d_d2p}), g.primal_type_mask);
    Var beta_d = tape.masked_row_softmax(d_p2d, g.dual_type_mask);

    Var primal_out = tape.add(tape.colscale_row(h_p2p, beta_p, 0), tape.colscale_row(h_d2p, beta_p, 1));
    Var dual_out = tape.colscale_row(h_p2d, beta_d, 0);

    primal_out = add_isolated(tape, store, primal_out, primal, g.primal_isolated,
                              prefix_ + ".p_iso", dims_.primal_in, g.n_primal);
    dual_out = add_isolated(tape, store, dual_out, dual, g.dual_isolated, prefix_ + ".d_iso",
                            dims_.dual_in, g.n_dual);

    if (capture) {
      capture->alpha_p2p = tape.value(alpha_p2p).template cast<double>();
      capture->alpha_p2d = tape.value(alpha_p2d).template cast<double>();
      capture->alpha_d2p = tape.value(alpha_d2p).template cast<double>();
      capture->beta_primal = tape.value(beta_p).template cast<double>();
      capture->beta_dual = tape.value(beta_d).template cast<double>();
    }
    return {primal_out, dual_out};
  }

 private:
  std::pair<Var, Var> edge_type(Tape<S>& tape, ParamStore<S>& store, const std::string& kind,
                                const MlpSpec& e_spec, const MlpSpec& a_spec, const MlpSpec& v_spec,
                                const std::vector<int>& src, const std::vector<int>& dst,
                                const Mat& edge_feat, Var src_feats, Var dst_feats, int n_dst,
                                Var& alpha_out) const {
    Var in = tape.concat_rows({tape.gather_cols(src_feats, src), tape.gather_cols(dst_feats, dst),
                               tape.constant(edge_feat)});
    Var h_edge = mlp_forward(tape, store, prefix_ + "." + kind + "_e", e_spec, in);
    Var logits = mlp_forward(tape, store, prefix_ + "." + kind + "_a", a_spec, in);
    Var alpha = tape.segment_softmax(logits, dst, n_dst);
    alpha_out = alpha;
    Var msg = tape.segment_sum(tape.colscale(h_edge, alpha), dst, n_dst);
    Var updated = mlp_forward(tape, store, prefix_ + "." + kind + "_v", v_spec,
                              tape.concat_rows({dst_feats, msg}));
    Var type_logit = mlp_forward(tape, store, prefix_ + ".n", n_, updated);
    return {updated, type_logit};
  }

  Var add_isolated(Tape<S>& tape, ParamStore<S>& store, Var combined, Var feats,
                   const std::vector<int>& isolated, const std::string& proj_name, int in_dim,
                   int total) const {
    if (isolated.empty()) return combined;
    Var iso_feats = tape.gather_cols(feats, isolated);
    Var projected = (in_dim != dims_.embed)
                        ? tape.matmul(tape.param(store, proj_name), iso_feats)
                        : iso_feats;
    return tape.add(combined, tape.scatter_cols(projected, isolated, total));
  }

  std::string prefix_;
  HgaLayerDims dims_;
  MlpSpec p2p_e_, p2d_e_, d2p_e_;
  MlpSpec p2p_a_, p2d_a_, d2p_a_;
  MlpSpec p2p_v_, p2d_v_, d2p_v_;
  MlpSpec n_;
};

}  // namespace adaptqp

#endif
