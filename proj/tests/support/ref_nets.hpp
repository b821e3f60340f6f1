#ifndef ADAPTQP_TESTS_REF_NETS_HPP
#define ADAPTQP_TESTS_REF_NETS_HPP

// Scalar-loop reference implementations of the network layers, independent
// of the Tape/batched-matrix path. They read the same named parameters but
// follow the layer definitions directly.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "adaptqp/graph.hpp"
#include "adaptqp/nn.hpp"
#include "adaptqp/params.hpp"

namespace adaptqp_tests {

using Vec = std::vector<double>;

inline double ref_leaky(double v) { return v > 0.0 ? v : adaptqp::kLeakySlope * v; }

/// y = W x + b computed with explicit loops.
inline Vec ref_affine(const adaptqp::ParamStore<double>& store, const std::string& w_name,
                      const std::string& b_name, const Vec& x) {
  const auto& w = store.value(w_name);
  const auto& b = store.value(b_name);
  Vec y(w.rows(), 0.0);
  for (int i = 0; i < w.rows(); ++i) {
    double acc = b(i, 0);
    for (int j = 0; j < w.cols(); ++j) acc += w(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

inline Vec ref_mlp(const adaptqp::ParamStore<double>& store, const std::string& prefix,
                   const adaptqp::MlpSpec& spec, Vec x) {
  std::vector<int> dims = spec.hidden;
  dims.push_back(spec.output_dim);
  for (std::size_t layer = 0; layer < dims.size(); ++layer) {
    x = ref_affine(store, prefix + ".w" + std::to_string(layer),
                   prefix + ".b" + std::to_string(layer), x);
    if (layer + 1 < dims.size()) {
      for (double& v : x) v = ref_leaky(v);
    } else if (spec.output_activation == adaptqp::OutputActivation::ExpTanh) {
      for (double& v : x) v = (std::tanh(v) + 1.0) * 3.0 - 3.0;
    }
  }
  return x;
}

inline double ref_sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

inline Vec ref_gru_step(const adaptqp::ParamStore<double>& store, const std::string& prefix,
                        const Vec& x, const Vec& h) {
  Vec xh(x);
  xh.insert(xh.end(), h.begin(), h.end());
  Vec z = ref_affine(store, prefix + ".wz", prefix + ".bz", xh);
  Vec r = ref_affine(store, prefix + ".wr", prefix + ".br", xh);
  for (double& v : z) v = ref_sigmoid(v);
  for (double& v : r) v = ref_sigmoid(v);
  Vec xrh(x);
  for (std::size_t i = 0; i < h.size(); ++i) xrh.push_back(r[i] * h[i]);
  Vec n = ref_affine(store, prefix + ".wn", prefix + ".bn", xrh);
  for (double& v : n) v = std::tanh(v);
  Vec out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = (1.0 - z[i]) * n[i] + z[i] * h[i];
  return out;
}

/// Reference HGA layer over a single HeteroGraph, per-edge scalar loops:
/// edge encoders and scalar attention logits, in-neighbor softmax, per-type
/// node update, then softmax over the types arriving at each node.
struct RefHga {
  const adaptqp::ParamStore<double>& store;
  std::string prefix;
  int primal_in;
  int dual_in;
  int embed = 8;

  adaptqp::MlpSpec e_spec(int src, int dst, int edge) const {
    return {src + dst + edge, {64, 16}, embed};
  }
  adaptqp::MlpSpec a_spec(int src, int dst, int edge) const {
    return {src + dst + edge, {64, 16}, 1};
  }
  adaptqp::MlpSpec v_spec(int dst) const { return {dst + embed, {64, 16}, embed}; }
  adaptqp::MlpSpec n_spec() const { return {embed, {64, 32}, 1}; }

  static Vec concat(const Vec& a, const Vec& b) {
    Vec out(a);
    out.insert(out.end(), b.begin(), b.end());
    return out;
  }

  /// features are stored row-per-node matrices
  std::pair<std::vector<Vec>, std::vector<Vec>> forward(
      const adaptqp::HeteroGraph& g, const std::vector<Vec>& primal_feats,
      const std::vector<Vec>& dual_feats) const {
    struct EdgeSet {
      std::string kind;
      const std::vector<adaptqp::GraphEdge>* edges;
      const Eigen::MatrixXd* feat;
      bool src_primal;
      bool dst_primal;
    };
    const std::vector<EdgeSet> sets = {
        {"p2p", &g.p2p_edges, &g.p2p_feat, true, true},
        {"p2d", &g.p2d_edges, &g.p2d_feat, true, false},
        {"d2p", &g.d2p_edges, &g.d2p_feat, false, true},
    };

    // per destination node: type -> (updated embedding, type logit)
    std::map<std::pair<bool, int>, std::map<std::string, std::pair<Vec, double>>> updated;

    for (const EdgeSet& set : sets) {
      const int src_dim = set.src_primal ? primal_in : dual_in;
      const int dst_dim = set.dst_primal ? primal_in : dual_in;
      const int edge_dim = static_cast<int>(set.feat->cols());
      const auto espec = e_spec(src_dim, dst_dim, edge_dim);
      const auto aspec = a_spec(src_dim, dst_dim, edge_dim);

      // group edges by destination
      std::map<int, std::vector<int>> by_dst;
      for (std::size_t e = 0; e < set.edges->size(); ++e) by_dst[(*set.edges)[e].dst].push_back(static_cast<int>(e));

      for (const auto& [dst, edge_ids] : by_dst) {
        std::vector<Vec> h_edges;
        std::vector<double> logits;
        for (int e : edge_ids) {
          const auto& edge = (*set.edges)[e];
          Vec in = set.src_primal ? primal_feats[edge.src] : dual_feats[edge.src];
          in = concat(in, set.dst_primal ? primal_feats[dst] : dual_feats[dst]);
          for (int c = 0; c < edge_dim; ++c) in.push_back((*set.feat)(e, c));
          h_edges.push_back(ref_mlp(store, prefix + "." + set.kind + "_e", espec, in));
          logits.push_back(ref_mlp(store, prefix + "." + set.kind + "_a", aspec, in)[0]);
        }
        double zmax = logits[0];
        for (double z : logits) zmax = std::max(zmax, z);
        double denom = 0.0;
        for (double z : logits) denom += std::exp(z - zmax);
        Vec msg(embed, 0.0);
        for (std::size_t k = 0; k < logits.size(); ++k) {
          const double alpha = std::exp(logits[k] - zmax) / denom;
          for (int c = 0; c < embed; ++c) msg[c] += alpha * h_edges[k][c];
        }
        const Vec& dst_feat = set.dst_primal ? primal_feats[dst] : dual_feats[dst];
        Vec upd = ref_mlp(store, prefix + "." + set.kind + "_v", v_spec(set.dst_primal ? primal_in : dual_in),
                          concat(dst_feat, msg));
        const double type_logit = ref_mlp(store, prefix + ".n", n_spec(), upd)[0];
        updated[{set.dst_primal, dst}][set.kind] = {upd, type_logit};
      }
    }

    auto combine = [&](bool is_primal, int node, const Vec& feats, int in_dim,
                       const std::string& proj) {
      auto it = updated.find({is_primal, node});
      if (it == updated.end()) {
        if (in_dim == embed) return feats;
        Vec out(embed, 0.0);
        const auto& w = store.value(proj);
        for (int i = 0; i < embed; ++i)
          for (int j = 0; j < in_dim; ++j) out[i] += w(i, j) * feats[j];
        return out;
      }
      double dmax = -1e300;
      for (const auto& [kind, hv] : it->second) dmax = std::max(dmax, hv.second);
      double denom = 0.0;
      for (const auto& [kind, hv] : it->second) denom += std::exp(hv.second - dmax);
      Vec out(embed, 0.0);
      for (const auto& [kind, hv] : it->second) {
        const double beta = std::exp(hv.second - dmax) / denom;
        for (int c = 0; c < embed; ++c) out[c] += beta * hv.first[c];
      }
      return out;
    };

    std::vector<Vec> primal_out, dual_out;
    for (int i = 0; i < g.n_primal; ++i)
      primal_out.push_back(combine(true, i, primal_feats[i], primal_in, prefix + ".p_iso"));
    for (int j = 0; j < g.n_dual; ++j)
      dual_out.push_back(combine(false, j, dual_feats[j], dual_in, prefix + ".d_iso"));
    return {primal_out, dual_out};
  }
};

}  // namespace adaptqp_tests

#endif
