#ifndef ADAPTQP_GRAPH_HPP
#define ADAPTQP_GRAPH_HPP

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "adaptqp/admm.hpp"
#include "adaptqp/errors.hpp"
#include "adaptqp/problem.hpp"

namespace adaptqp {

struct GraphEdge {
  int src = 0;
  int dst = 0;
};

/// Directed heterogeneous graph over primal and dual variables.
///
/// Node features encode solver state, edge features encode the problem data:
/// p2p edges follow nonzeros of P (feature [P_ij, q_i]), p2d edges nonzeros
/// of A' (feature [A_ji]) and d2p edges nonzeros of A (feature [A_ij]).
struct HeteroGraph {
  int n_primal = 0;
  int n_dual = 0;
  bool include_rho = false;

  Eigen::MatrixXd primal_features;  // n_primal x 3
  Eigen::MatrixXd dual_features;    // n_dual x (8 with rho, 7 without)

  std::vector<GraphEdge> p2p_edges;
  Eigen::MatrixXd p2p_feat;  // |p2p| x 2
  std::vector<GraphEdge> p2d_edges;
  Eigen::MatrixXd p2d_feat;  // |p2d| x 1
  std::vector<GraphEdge> d2p_edges;
  Eigen::MatrixXd d2p_feat;  // |d2p| x 1

  int dual_feature_dim() const { return include_rho ? 8 : 7; }
};

/// History of the most recent observed graphs, oldest first.
using Observation = std::vector<std::shared_ptr<const HeteroGraph>>;

namespace graph_detail {

inline double log10_guarded(double v) { return std::log10(std::max(std::abs(v), 1e-10)); }

inline double bounded_slack(double z, double l, double u) {
  constexpr double kSlackCap = 1e6;
  double slack;
  const bool l_inf = (l == -kInf);
  const bool u_inf = (u == kInf);
  if (l_inf && u_inf) {
    slack = kSlackCap;
  } else if (l_inf) {
    slack = u - z;
  } else if (u_inf) {
    slack = z - l;
  } else {
    slack = std::min(z - l, u - z);
  }
  return std::clamp(slack, -kSlackCap, kSlackCap);
}

}  // namespace graph_detail

/// Builds the graph from a preprocessed problem and a state with current
/// residuals. include_rho controls whether rho_m appears in dual features
/// (present for observed/critic graphs, absent for the actor's current graph).
inline HeteroGraph build_graph(const QpProblem& prob, const AdmmState& state,
                               const AdmmSettings& settings, bool include_rho) {
  if (!prob.scaled) throw InvalidArgument("build_graph needs a preprocessed problem");
  if (!state.residuals_current())
    throw StaleResiduals("residuals were computed at a different iteration");

  HeteroGraph g;
  g.n_primal = prob.n;
  g.n_dual = prob.m;
  g.include_rho = include_rho;

  const double rd_norm_log = graph_detail::log10_guarded(inf_norm(state.r_dual));
  g.primal_features.resize(prob.n, 3);
  for (int i = 0; i < prob.n; ++i) {
    const double rd = std::abs(state.r_dual[i]);
    g.primal_features(i, 0) = graph_detail::log10_guarded(rd);
    g.primal_features(i, 1) = rd_norm_log;
    g.primal_features(i, 2) = rd < settings.eps_dual ? 1.0 : 0.0;
  }

  const double rp_norm_log = graph_detail::log10_guarded(inf_norm(state.r_primal));
  g.dual_features.resize(prob.m, g.dual_feature_dim());
  for (int j = 0; j < prob.m; ++j) {
    const double rp = std::abs(state.r_primal[j]);
    int c = 0;
    g.dual_features(j, c++) = graph_detail::log10_guarded(rp);
    g.dual_features(j, c++) = rp_norm_log;
    g.dual_features(j, c++) = rp < settings.eps_primal ? 1.0 : 0.0;
    g.dual_features(j, c++) = state.y[j];
    if (include_rho) g.dual_features(j, c++) = state.rho[j];
    g.dual_features(j, c++) = graph_detail::bounded_slack(state.z[j], prob.l[j], prob.u[j]);
    const bool equality = (prob.l[j] == prob.u[j]);
    g.dual_features(j, c++) = equality ? 1.0 : 0.0;
    g.dual_features(j, c++) = equality ? 0.0 : 1.0;
  }

  g.p2p_edges.reserve(prob.p.nnz());
  g.p2p_feat.resize(static_cast<int>(prob.p.nnz()), 2);
  int e = 0;
  for (const Triplet& t : prob.p.entries()) {
    g.p2p_edges.push_back({t.row, t.col});
    g.p2p_feat(e, 0) = t.value;
    g.p2p_feat(e, 1) = prob.q[t.row];
    ++e;
  }

  g.p2d_edges.reserve(prob.a.nnz());
  g.d2p_edges.reserve(prob.a.nnz());
  g.p2d_feat.resize(static_cast<int>(prob.a.nnz()), 1);
  g.d2p_feat.resize(static_cast<int>(prob.a.nnz()), 1);
  e = 0;
  for (const Triplet& t : prob.a.entries()) {
    // A_{ji} with j = t.row (dual), i = t.col (primal)
    g.p2d_edges.push_back({t.col, t.row});
    g.p2d_feat(e, 0) = t.value;
    g.d2p_edges.push_back({t.row, t.col});
    g.d2p_feat(e, 0) = t.value;
    ++e;
  }
  return g;
}

/// Relabels nodes and edge endpoints; used by the equivariance tests.
inline HeteroGraph permute_graph(const HeteroGraph& g, const std::vector<int>& primal_perm,
                                 const std::vector<int>& dual_perm) {
  if (static_cast<int>(primal_perm.size()) != g.n_primal ||
      static_cast<int>(dual_perm.size()) != g.n_dual) {
    throw DimensionMismatch("permutation size mismatch");
  }
  HeteroGraph out = g;
  for (int i = 0; i < g.n_primal; ++i) out.primal_features.row(primal_perm[i]) = g.primal_features.row(i);
  for (int j = 0; j < g.n_dual; ++j) out.dual_features.row(dual_perm[j]) = g.dual_features.row(j);
  for (std::size_t e = 0; e < g.p2p_edges.size(); ++e) {
    out.p2p_edges[e] = {primal_perm[g.p2p_edges[e].src], primal_perm[g.p2p_edges[e].dst]};
  }
  for (std::size_t e = 0; e < g.p2d_edges.size(); ++e) {
    out.p2d_edges[e] = {primal_perm[g.p2d_edges[e].src], dual_perm[g.p2d_edges[e].dst]};
  }
  for (std::size_t e = 0; e < g.d2p_edges.size(); ++e) {
    out.d2p_edges[e] = {dual_perm[g.d2p_edges[e].src], primal_perm[g.d2p_edges[e].dst]};
  }
  return out;
}

/// Drops the rho column from an observed graph, producing the actor-side
/// variant. Exactly equal to rebuilding with include_rho = false.
inline HeteroGraph strip_rho(const HeteroGraph& g) {
  if (!g.include_rho) return g;
  HeteroGraph out = g;
  out.include_rho = false;
  out.dual_features.resize(g.n_dual, 7);
  out.dual_features.leftCols(4) = g.dual_features.leftCols(4);
  out.dual_features.rightCols(3) = g.dual_features.rightCols(3);
  return out;
}

inline nlohmann::json graph_to_json(const HeteroGraph& g) {
  nlohmann::json j;
  j["n_primal"] = g.n_primal;
  j["n_dual"] = g.n_dual;
  j["include_rho"] = g.include_rho;
  auto mat = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
      rows.push_back(row);
    }
    return rows;
  };
  j["primal_features"] = mat(g.primal_features);
  j["dual_features"] = mat(g.dual_features);
  auto edges = [&mat](const std::vector<GraphEdge>& es, const Eigen::MatrixXd& feats) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t e = 0; e < es.size(); ++e) {
      nlohmann::json row = {es[e].src, es[e].dst};
      for (int c = 0; c < feats.cols(); ++c) row.push_back(feats(static_cast<int>(e), c));
      arr.push_back(row);
    }
    return arr;
  };
  j["p2p"] = edges(g.p2p_edges, g.p2p_feat);
  j["p2d"] = edges(g.p2d_edges, g.p2d_feat);
  j["d2p"] = edges(g.d2p_edges, g.d2p_feat);
  return j;
}

}  // namespace adaptqp

#endif
