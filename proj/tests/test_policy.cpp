#include <doctest.h>

#include <memory>

#include "adaptqp/policy.hpp"
#include "adaptqp/probgen.hpp"
#include "support/grad_check.hpp"
#include "support/graph_fixtures.hpp"
#include "support/ref_nets.hpp"

using namespace adaptqp;
using adaptqp_tests::random_graph;
using adaptqp_tests::refeatured;

namespace {

AdmmState dummy_state(const QpProblem& prob, Rng& rng) {
  AdmmSettings settings;
  AdmmState state = init_state(prob, settings);
  for (int i = 0; i < prob.n; ++i) state.x[i] = rng.normal();
  for (int j = 0; j < prob.m; ++j) {
    state.y[j] = rng.normal();
    state.z[j] = rng.normal();
  }
  compute_residuals(state, prob);
  return state;
}

Observation make_history(Rng& rng, int n, int m, int len) {
  Observation obs;
  HeteroGraph base = random_graph(rng, n, m);
  obs.push_back(std::make_shared<HeteroGraph>(base));
  for (int i = 1; i < len; ++i) {
    obs.push_back(std::make_shared<HeteroGraph>(refeatured(rng, base)));
  }
  return obs;
}

void zero_all(ParamStore<double>& store) {
  for (auto& [name, e] : store.entries()) e.value.setZero();
}

}  // namespace

TEST_CASE("fixed policy returns the constant vector and ignores state") {
  QpProblem prob = gen_random_qp(3, 7);
  Rng rng(1);
  AdmmState s1 = dummy_state(prob, rng);
  AdmmState s2 = dummy_state(prob, rng);
  FixedRhoPolicy policy(0.1);
  AdmmSettings settings;
  const Eigen::VectorXd r1 = policy.act(prob, s1, settings);
  const Eigen::VectorXd r2 = policy.act(prob, s2, settings);
  CHECK(r1.size() == prob.m);
  CHECK((r1.array() == 0.1).all());
  CHECK((r1 - r2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fixed policy rejects rho0 outside the bounds") {
  CHECK_THROWS_AS(FixedRhoPolicy(1e9), InvalidArgument);
  CHECK_THROWS_AS(FixedRhoPolicy(0.0), InvalidArgument);
}

TEST_CASE("heuristic policy: hysteresis band and sqrt scaling") {
  QpProblem prob = gen_random_qp(3, 7);
  AdmmSettings settings;
  AdmmState state = init_state(prob, settings);
  HeuristicRhoPolicy policy;

  state.r_primal = Eigen::VectorXd::Constant(prob.m, 0.5);
  state.r_dual = Eigen::VectorXd::Constant(prob.n, 0.5);
  state.residual_iteration = state.iteration;
  CHECK((policy.act(prob, state, settings) - state.rho).cwiseAbs().maxCoeff() == 0.0);

  state.r_primal.setConstant(100.0);
  state.r_dual.setConstant(1.0);
  const Eigen::VectorXd scaled = policy.act(prob, state, settings);
  CHECK(scaled[0] == doctest::Approx(state.rho[0] * 10.0));

  state.r_primal.setConstant(1e-12);
  state.r_dual.setConstant(1.0);
  state.rho.setConstant(2e-6);
  const Eigen::VectorXd clamped = policy.act(prob, state, settings);
  CHECK(clamped[0] == doctest::Approx(settings.rho_min));
}

TEST_CASE("rlqp-style policy: shared weights give identical rho for identical features") {
  QpProblem prob = gen_eq_qp(4, 11);  // all rows equality
  AdmmSettings settings;
  AdmmState state = init_state(prob, settings);
  state.z.setZero();
  state.y.setZero();
  state.rho.setConstant(0.1);
  compute_residuals(state, prob);
  // force identical per-row features
  state.r_primal.setConstant(0.3);
  state.z.setConstant(0.0);
  QpProblem uniform = prob;
  uniform.l.setConstant(1.0);
  uniform.u.setConstant(1.0);

  auto store = std::make_shared<ParamStore<double>>();
  Rng rng(3);
  init_rlqp_params(*store, rng);
  RlqpStylePolicy<double> policy(store);
  const Eigen::VectorXd rho = policy.act(uniform, state, settings);
  for (int j = 1; j < rho.size(); ++j) CHECK(rho[j] == doctest::Approx(rho[0]));
}

TEST_CASE("rlqp-style policy: zero network outputs rho = 1") {
  QpProblem prob = gen_random_qp(3, 13);
  AdmmSettings settings;
  Rng rng(5);
  AdmmState state = dummy_state(prob, rng);
  auto store = std::make_shared<ParamStore<double>>();
  Rng init(7);
  init_rlqp_params(*store, init);
  zero_all(*store);
  RlqpStylePolicy<double> policy(store);
  const Eigen::VectorXd rho = policy.act(prob, state, settings);
  CHECK((rho.array() == 1.0).all());
}

TEST_CASE("rlqp-style policy matches the scalar reference network") {
  QpProblem prob = gen_random_qp(4, 17);
  AdmmSettings settings;
  Rng rng(9);
  AdmmState state = dummy_state(prob, rng);
  ParamStore<double> store;
  Rng init(11);
  init_rlqp_params(store, init);

  const Eigen::VectorXd rho = rlqp_style_act(store, prob, state, settings);
  const auto feats = rlqp_features<double>(prob, state);
  for (int j = 0; j < prob.m; ++j) {
    adaptqp_tests::Vec x(6);
    for (int c = 0; c < 6; ++c) x[c] = feats(c, j);
    const double ref = adaptqp_tests::ref_mlp(store, "rlqp", kRlqpNetSpec, x)[0];
    CHECK(rho[j] == doctest::Approx(std::pow(10.0, ref)).epsilon(1e-10));
    CHECK(rho[j] >= settings.rho_min);
    CHECK(rho[j] <= settings.rho_max);
  }
}

TEST_CASE("actor: zero-initialized network returns rho = 1 everywhere") {
  Rng rng(13);
  Observation obs = make_history(rng, 4, 3, 3);
  ContextActor<double> actor("actor");
  ParamStore<double> store;
  Rng init(15);
  actor.init(store, init);
  zero_all(store);
  AdmmSettings settings;
  const Eigen::VectorXd rho = ca_admm_act(actor, store, obs, 3, settings);
  CHECK(rho.size() == 3);
  for (int j = 0; j < 3; ++j) CHECK(rho[j] == doctest::Approx(1.0));
}

TEST_CASE("actor: output is inside (1e-3, 1e3) before clamping") {
  Rng rng(17);
  Observation obs = make_history(rng, 5, 4, 3);
  ContextActor<double> actor("actor");
  ParamStore<double> store;
  Rng init(19);
  actor.init(store, init);
  // inflate parameters to push the head toward saturation; tanh rounds to
  // +-1 in double precision, so the open bound closes at the endpoints
  for (auto& [name, e] : store.entries()) e.value *= 25.0;
  AdmmSettings settings;
  settings.rho_min = 1e-9;
  settings.rho_max = 1e9;
  const Eigen::VectorXd rho = ca_admm_act(actor, store, obs, 3, settings);
  for (int j = 0; j < rho.size(); ++j) {
    CHECK(rho[j] >= 1e-3);
    CHECK(rho[j] <= 1e3);
  }
}

TEST_CASE("actor: history shorter than l pads by repeating the oldest") {
  Rng rng(21);
  Observation obs = make_history(rng, 3, 2, 1);
  ContextActor<double> actor("actor");
  ParamStore<double> store;
  Rng init(23);
  actor.init(store, init);
  AdmmSettings settings;
  const Eigen::VectorXd rho_short = ca_admm_act(actor, store, obs, 3, settings);

  Observation padded = {obs[0], obs[0], obs[0]};
  const Eigen::VectorXd rho_padded = ca_admm_act(actor, store, padded, 3, settings);
  CHECK((rho_short - rho_padded).cwiseAbs().maxCoeff() == 0.0);

  Observation empty;
  CHECK_THROWS_AS(ca_admm_act(actor, store, empty, 3, settings), HistoryTooShort);
}

TEST_CASE("actor: permuting nodes permutes rho identically") {
  Rng rng(25);
  for (int trial = 0; trial < 5; ++trial) {
    Observation obs = make_history(rng, 4, 5, 3);
    const auto pperm = adaptqp_tests::random_permutation(rng, 4);
    const auto dperm = adaptqp_tests::random_permutation(rng, 5);
    Observation perm_obs;
    for (const auto& g : obs) {
      perm_obs.push_back(std::make_shared<HeteroGraph>(permute_graph(*g, pperm, dperm)));
    }
    ContextActor<double> actor("actor");
    ParamStore<double> store;
    Rng init(400 + trial);
    actor.init(store, init);
    AdmmSettings settings;
    const Eigen::VectorXd rho = ca_admm_act(actor, store, obs, 3, settings);
    const Eigen::VectorXd rho_perm = ca_admm_act(actor, store, perm_obs, 3, settings);
    for (int j = 0; j < 5; ++j) CHECK(rho[j] == doctest::Approx(rho_perm[dperm[j]]).epsilon(1e-12));
  }
}

TEST_CASE("critic: zero parameters give zero value") {
  Rng rng(27);
  Observation obs = make_history(rng, 4, 3, 3);
  ContextCritic<double> critic("critic");
  ParamStore<double> store;
  Rng init(29);
  critic.init(store, init);
  zero_all(store);
  const Eigen::VectorXd action = Eigen::VectorXd::Constant(3, 0.5);
  CHECK(ca_admm_q(critic, store, obs, 3, action) == doctest::Approx(0.0));
}

TEST_CASE("critic: value invariant under consistent node permutation") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    Observation obs = make_history(rng, 4, 4, 3);
    const auto pperm = adaptqp_tests::random_permutation(rng, 4);
    const auto dperm = adaptqp_tests::random_permutation(rng, 4);
    Observation perm_obs;
    for (const auto& g : obs) {
      perm_obs.push_back(std::make_shared<HeteroGraph>(permute_graph(*g, pperm, dperm)));
    }
    Eigen::VectorXd action(4);
    for (int j = 0; j < 4; ++j) action[j] = std::exp(rng.normal());
    Eigen::VectorXd action_perm(4);
    for (int j = 0; j < 4; ++j) action_perm[dperm[j]] = action[j];

    ContextCritic<double> critic("critic");
    ParamStore<double> store;
    Rng init(500 + trial);
    critic.init(store, init);
    const double v = ca_admm_q(critic, store, obs, 3, action);
    const double v_perm = ca_admm_q(critic, store, perm_obs, 3, action_perm);
    CHECK(v == doctest::Approx(v_perm).epsilon(1e-10));
  }
}

TEST_CASE("critic: gradient with respect to the action matches finite differences") {
  Rng rng(33);
  Observation obs = make_history(rng, 3, 3, 3);
  ContextCritic<double> critic("critic");
  ParamStore<double> store;
  Rng init(35);
  critic.init(store, init);
  Eigen::VectorXd action(3);
  for (int j = 0; j < 3; ++j) action[j] = std::exp(rng.normal());
  Eigen::VectorXd grad;
  ca_admm_q(critic, store, obs, 3, action, &grad);
  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd up = action, down = action;
    up[j] += h;
    down[j] -= h;
    const double fd =
        (ca_admm_q(critic, store, obs, 3, up) - ca_admm_q(critic, store, obs, 3, down)) / (2 * h);
    CHECK(std::abs(grad[j] - fd) / std::max({1e-6, std::abs(fd), std::abs(grad[j])}) < 1e-4);
  }
}

TEST_CASE("context policy with zero nets tracks the fixed rho=1 policy through solve") {
  QpProblem prob = gen_random_qp(6, 41);
  auto store = std::make_shared<ParamStore<double>>();
  {
    ContextActor<double> proto("actor");
    Rng init(37);
    proto.init(*store, init);
    for (auto& [name, e] : store->entries()) e.value.setZero();
  }
  ContextPolicy<double> ctx_policy(store, 3);
  FixedRhoPolicy fixed(1.0);
  AdmmSettings settings;
  auto a = solve(prob, ctx_policy, settings);
  auto b = solve(prob, fixed, settings);
  CHECK(a.solution.status == b.solution.status);
  CHECK(a.solution.iterations == b.solution.iterations);
  CHECK((a.solution.x - b.solution.x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("policies are deterministic given parameters and inputs") {
  Rng rng(39);
  Observation obs = make_history(rng, 4, 3, 3);
  ContextActor<double> actor("actor");
  ParamStore<double> store;
  Rng init(41);
  actor.init(store, init);
  AdmmSettings settings;
  const Eigen::VectorXd r1 = ca_admm_act(actor, store, obs, 3, settings);
  const Eigen::VectorXd r2 = ca_admm_act(actor, store, obs, 3, settings);
  CHECK((r1 - r2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("policy checkpoints round-trip through the container with a kind tag") {
  ContextActor<double> actor("actor");
  ParamStore<double> store;
  Rng init(43);
  actor.init(store, init);
  const std::string path = "/tmp/adaptqp_policy_ckpt.bin";
  save_checkpoint(store, "context_actor", path);

  ParamStore<double> loaded;
  ContextActor<double> actor2("actor");
  Rng init2(99);  // different seed; values overwritten by the checkpoint
  actor2.init(loaded, init2);
  CHECK(load_checkpoint(loaded, path) == "context_actor");

  Rng rng(45);
  Observation obs = make_history(rng, 3, 2, 3);
  AdmmSettings settings;
  const Eigen::VectorXd r1 = ca_admm_act(actor, store, obs, 3, settings);
  const Eigen::VectorXd r2 = ca_admm_act(actor2, loaded, obs, 3, settings);
  CHECK((r1 - r2).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}
