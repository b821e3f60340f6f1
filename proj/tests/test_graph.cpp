#include <doctest.h>

#include <set>

#include "adaptqp/graph.hpp"
#include "adaptqp/policy.hpp"
#include "adaptqp/scaling.hpp"
#include "support/graph_fixtures.hpp"
#include "support/test_problems.hpp"

using namespace adaptqp;

namespace {

QpProblem two_var_problem() {
  QpProblem prob;
  prob.n = 2;
  prob.m = 1;
  prob.p = SparseMatrix(2, 2, {{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 2.0}});
  prob.q.resize(2);
  prob.q << 1.0, -1.0;
  prob.a = SparseMatrix(1, 2, {{0, 0, 1.0}});
  prob.l = Eigen::VectorXd::Constant(1, 0.0);
  prob.u = Eigen::VectorXd::Constant(1, 1.0);
  return prob;
}

AdmmState fresh_state(const QpProblem& prob, const AdmmSettings& settings) {
  AdmmState state = init_state(prob, settings);
  compute_residuals(state, prob);
  return state;
}

}  // namespace

TEST_CASE("graph: edge sets follow the nonzero patterns") {
  QpProblem prob = preprocess(two_var_problem());
  AdmmSettings settings;
  AdmmState state = fresh_state(prob, settings);
  HeteroGraph g = build_graph(prob, state, settings, true);
  CHECK(g.n_primal == 2);
  CHECK(g.n_dual == 1);
  CHECK(g.p2p_edges.size() == 4);
  CHECK(g.p2d_edges.size() == 1);
  CHECK(g.d2p_edges.size() == 1);
  // p2d edge points primal -> dual, d2p the reverse
  CHECK(g.p2d_edges[0].src == 0);
  CHECK(g.p2d_edges[0].dst == 0);
  CHECK(g.d2p_edges[0].src == 0);
  CHECK(g.d2p_edges[0].dst == 0);
  // edge features carry the scaled problem entries
  CHECK(g.p2p_feat(0, 0) == doctest::Approx(prob.p.coeff(0, 0)));
  CHECK(g.p2p_feat(0, 1) == doctest::Approx(prob.q[0]));
  CHECK(g.p2d_feat(0, 0) == doctest::Approx(prob.a.coeff(0, 0)));
}

TEST_CASE("graph: equality rows set the indicator pair (1, 0)") {
  QpProblem prob = two_var_problem();
  prob.l[0] = prob.u[0] = 1.0;
  prob = preprocess(prob);
  AdmmSettings settings;
  AdmmState state = fresh_state(prob, settings);
  HeteroGraph g = build_graph(prob, state, settings, true);
  const int c = g.dual_features.cols();
  CHECK(g.dual_features(0, c - 2) == 1.0);  // equality
  CHECK(g.dual_features(0, c - 1) == 0.0);  // inequality
  // slack = min(z - l, u - z) = z - 1 when l = u = 1
  CHECK(g.dual_features(0, c - 3) == doctest::Approx(state.z[0] - prob.l[0]));
}

TEST_CASE("graph: zero residuals clamp the log features at -10") {
  QpProblem prob = preprocess(two_var_problem());
  AdmmSettings settings;
  AdmmState state = init_state(prob, settings);
  state.r_primal = Eigen::VectorXd::Zero(1);
  state.r_dual = Eigen::VectorXd::Zero(2);
  state.residual_iteration = state.iteration;
  HeteroGraph g = build_graph(prob, state, settings, true);
  CHECK(g.primal_features(0, 0) == doctest::Approx(-10.0));
  CHECK(g.primal_features(0, 1) == doctest::Approx(-10.0));
  CHECK(g.primal_features(0, 2) == 1.0);  // |0| < eps
  CHECK(g.dual_features(0, 0) == doctest::Approx(-10.0));
}

TEST_CASE("graph: indicator features are exactly 0 or 1 and all features finite") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    QpProblem prob = adaptqp_tests::random_strictly_convex(rng, 4, 5, 0.3);
    prob.l[0] = -kInf;  // exercise infinite bounds
    prob.u[1] = kInf;
    prob.l[2] = -kInf;
    prob.u[2] = kInf;
    prob = preprocess(prob);
    AdmmSettings settings;
    AdmmState state = fresh_state(prob, settings);
    HeteroGraph g = build_graph(prob, state, settings, true);
    CHECK(g.primal_features.allFinite());
    CHECK(g.dual_features.allFinite());
    for (int i = 0; i < g.n_primal; ++i) {
      const double v = g.primal_features(i, 2);
      CHECK((v == 0.0 || v == 1.0));
    }
    const int c = g.dual_features.cols();
    for (int j = 0; j < g.n_dual; ++j) {
      for (int col : {2, c - 2, c - 1}) {
        const double v = g.dual_features(j, col);
        CHECK((v == 0.0 || v == 1.0));
      }
      CHECK(std::abs(g.dual_features(j, c - 3)) <= 1e6);  // slack clamp
    }
  }
}

TEST_CASE("graph: edge counts equal nnz on random problems") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    QpProblem prob = preprocess(adaptqp_tests::random_strictly_convex(rng, 5, 7));
    AdmmSettings settings;
    AdmmState state = fresh_state(prob, settings);
    HeteroGraph g = build_graph(prob, state, settings, true);
    CHECK(g.p2p_edges.size() == prob.p.nnz());
    CHECK(g.p2d_edges.size() == prob.a.nnz());
    CHECK(g.d2p_edges.size() == prob.a.nnz());
  }
}

TEST_CASE("graph: stale residuals are rejected") {
  QpProblem prob = preprocess(two_var_problem());
  AdmmSettings settings;
  AdmmState state = fresh_state(prob, settings);
  state.iteration += 1;  // residuals now stale
  CHECK_THROWS_AS(build_graph(prob, state, settings, true), StaleResiduals);
}

TEST_CASE("graph: unscaled problems are rejected") {
  QpProblem prob = two_var_problem();
  AdmmSettings settings;
  AdmmState state = fresh_state(prob, settings);
  CHECK_THROWS_AS(build_graph(prob, state, settings, true), InvalidArgument);
}

TEST_CASE("graph: scale transform of the problem leaves the graph unchanged") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    QpProblem prob = adaptqp_tests::random_strictly_convex(rng, 4, 5, 0.25);
    const double c = std::exp(rng.uniform(-2.0, 2.0));
    Eigen::VectorXd d(prob.m);
    for (int i = 0; i < prob.m; ++i) d[i] = std::exp(rng.uniform(-2.0, 2.0));
    QpProblem transformed = prob;
    transformed.p.scale_all(c);
    transformed.q *= c;
    transformed.a.scale_rows(d);
    transformed.l = transformed.l.cwiseProduct(d);
    transformed.u = transformed.u.cwiseProduct(d);

    QpProblem s1 = preprocess(prob);
    QpProblem s2 = preprocess(transformed);
    AdmmSettings settings;

    // run a few identical iterations on both scaled problems
    AdmmState st1 = init_state(s1, settings);
    AdmmState st2 = init_state(s2, settings);
    KktFactorization f1 = factorize_kkt(s1, st1.rho, settings.sigma);
    KktFactorization f2 = factorize_kkt(s2, st2.rho, settings.sigma);
    for (int k = 0; k < 7; ++k) {
      admm_iteration(st1, s1, f1, settings);
      admm_iteration(st2, s2, f2, settings);
    }
    compute_residuals(st1, s1);
    compute_residuals(st2, s2);

    HeteroGraph g1 = build_graph(s1, st1, settings, true);
    HeteroGraph g2 = build_graph(s2, st2, settings, true);
    CHECK((g1.primal_features - g2.primal_features).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g1.dual_features - g2.dual_features).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g1.p2p_feat - g2.p2p_feat).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g1.p2d_feat - g2.p2d_feat).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g1.d2p_feat - g2.d2p_feat).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("graph: identity permutation is a no-op, swaps are involutions") {
  Rng rng(17);
  HeteroGraph g = adaptqp_tests::random_graph(rng, 4, 3);
  HeteroGraph id = permute_graph(g, {0, 1, 2, 3}, {0, 1, 2});
  CHECK((id.primal_features - g.primal_features).cwiseAbs().maxCoeff() == 0.0);
  CHECK((id.dual_features - g.dual_features).cwiseAbs().maxCoeff() == 0.0);

  const std::vector<int> swap_p = {1, 0, 2, 3};
  HeteroGraph twice = permute_graph(permute_graph(g, swap_p, {0, 1, 2}), swap_p, {0, 1, 2});
  CHECK((twice.primal_features - g.primal_features).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t e = 0; e < g.p2p_edges.size(); ++e) {
    CHECK(twice.p2p_edges[e].src == g.p2p_edges[e].src);
    CHECK(twice.p2p_edges[e].dst == g.p2p_edges[e].dst);
  }
}

TEST_CASE("graph: permutation preserves the edge multiset") {
  Rng rng(19);
  HeteroGraph g = adaptqp_tests::random_graph(rng, 5, 4);
  const auto pperm = adaptqp_tests::random_permutation(rng, 5);
  const auto dperm = adaptqp_tests::random_permutation(rng, 4);
  HeteroGraph gp = permute_graph(g, pperm, dperm);

  std::multiset<std::tuple<int, int, double>> before, after;
  for (std::size_t e = 0; e < g.p2d_edges.size(); ++e) {
    before.insert({pperm[g.p2d_edges[e].src], dperm[g.p2d_edges[e].dst], g.p2d_feat(e, 0)});
    after.insert({gp.p2d_edges[e].src, gp.p2d_edges[e].dst, gp.p2d_feat(e, 0)});
  }
  CHECK(before == after);
}

TEST_CASE("graph: rho column appears exactly when requested") {
  QpProblem prob = preprocess(two_var_problem());
  AdmmSettings settings;
  AdmmState state = fresh_state(prob, settings);
  HeteroGraph with = build_graph(prob, state, settings, true);
  HeteroGraph without = build_graph(prob, state, settings, false);
  CHECK(with.dual_features.cols() == 8);
  CHECK(without.dual_features.cols() == 7);
  CHECK(with.dual_features(0, 4) == doctest::Approx(state.rho[0]));

  HeteroGraph stripped = strip_rho(with);
  CHECK((stripped.dual_features - without.dual_features).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("graph: json dump carries nodes and edges") {
  QpProblem prob = preprocess(two_var_problem());
  AdmmSettings settings;
  AdmmState state = fresh_state(prob, settings);
  HeteroGraph g = build_graph(prob, state, settings, true);
  nlohmann::json j = graph_to_json(g);
  CHECK(j["n_primal"] == 2);
  CHECK(j["n_dual"] == 1);
  CHECK(j["primal_features"].size() == 2);
  CHECK(j["p2p"].size() == 4);
  CHECK(j["p2d"][0].size() == 3);  // src, dst, one feature
}
