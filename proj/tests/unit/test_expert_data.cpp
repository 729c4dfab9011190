#include "helpers.hpp"
#include "oracles/oracles.hpp"

#include "ppil/envs.hpp"
#include "ppil/expert_data.hpp"
#include "ppil/rng.hpp"

#include <cmath>

using namespace ppil;
using testing_util::derived;
using testing_util::max_abs_diff;

TEST_SUITE("expert_data") {
  TEST_CASE("greedy expert of the two-state chain") {
    Env e = make_env("TwoStateDet");
    const Policy ex = generate_expert(e.mdp, e.mdp.true_cost(), ExpertKind::greedy());
    CHECK(ex(0, 1) == 1.0);
    CHECK(ex(1, 0) == 1.0);
  }

  TEST_CASE("zero cost gives action 0 everywhere") {
    Env e = make_env("RiverSwim");
    const Policy ex = generate_expert(e.mdp, Vector::Zero(e.mdp.n_pairs()), ExpertKind::greedy());
    for (int s = 0; s < e.mdp.n_states(); ++s) CHECK(ex(s, 0) == 1.0);
  }

  TEST_CASE("soft expert approaches the greedy one") {
    Env e = make_env("TwoStateDet");
    const Policy g = generate_expert(e.mdp, e.mdp.true_cost(), ExpertKind::greedy());
    const Policy s = generate_expert(e.mdp, e.mdp.true_cost(), ExpertKind::soft(100.0));
    for (int st = 0; st < 2; ++st) CHECK(0.5 * (g.probs().row(st) - s.probs().row(st)).cwiseAbs().sum() <= 0.01);
  }

  TEST_CASE("deterministic rollouts and their FEV") {
    Env e = make_env("TwoStateDet");
    const Policy ex = generate_expert(e.mdp, e.mdp.true_cost(), ExpertKind::greedy());
    const TrajectoryDataset data = sample_trajectories(e.mdp, ex, 5, 3, 11);
    CHECK(data.n_e() == 5);
    for (const auto& tr : data.trajectories) {
      CHECK(tr.states == std::vector<int>{0, 1, 1, 1});
      CHECK(tr.actions == std::vector<int>{1, 0, 0, 0});
    }
    const Vector rho = empirical_fev(data, e.features);
    const Vector expected = io::vector_from_json(derived()["two_state_det"]["empirical_fev_h3"], "fixture");
    CHECK(max_abs_diff(rho, expected) <= 1e-12);
  }

  TEST_CASE("single self-loop gives the truncated geometric sum") {
    TabularMdp mdp(1, 1, Matrix::Ones(1, 1), Vector::Ones(1), Vector::Zero(1), 0.9);
    const TrajectoryDataset data = sample_trajectories(mdp, Policy::uniform(1, 1), 1, 7, 0);
    const Vector rho = empirical_fev(data, tabular_features(mdp));
    CHECK(rho(0) == doctest::Approx(1.0 - std::pow(0.9, 8)).epsilon(1e-12));
  }

  TEST_CASE("sampling is reproducible under a seed") {
    Env e = make_env("RiverSwim");
    const Policy uni = Policy::uniform(e.mdp.n_states(), 2);
    const auto a = sample_trajectories(e.mdp, uni, 4, 20, 99);
    const auto b = sample_trajectories(e.mdp, uni, 4, 20, 99);
    const auto c = sample_trajectories(e.mdp, uni, 4, 20, 100);
    bool same = true, differs = false;
    for (int l = 0; l < 4; ++l) {
      same = same && a.trajectories[l].states == b.trajectories[l].states &&
             a.trajectories[l].actions == b.trajectories[l].actions;
      differs = differs || a.trajectories[l].states != c.trajectories[l].states;
    }
    CHECK(same);
    CHECK(differs);
  }

  TEST_CASE("FEV presets") {
    const FevPresets p = fev_presets(0.1, 0.1, 4, 0.9);
    const auto& fx = derived()["two_state_det"]["fev_presets_eps0.1_delta0.1_m4"];
    CHECK(p.n_e == fx["n_e"].get<int>());
    CHECK(p.horizon == fx["horizon"].get<int>());
    CHECK_THROWS_AS(fev_presets(0.0, 0.1, 4, 0.9), ConfigError);
  }

  TEST_CASE("occupancy buffer frequencies") {
    Env e = make_env("TwoStateDet");
    const Policy ex = generate_expert(e.mdp, e.mdp.true_cost(), ExpertKind::greedy());
    const Vector mu = oracle::occupancy_power_series(e.mdp, ex);
    for (DrawMode mode : {DrawMode::kGeometric, DrawMode::kEpisodic}) {
      const TransitionBuffer buf = sample_occupancy_buffer(e.mdp, ex, 50000, mode, 3, 200);
      Vector freq = Vector::Zero(4);
      for (const auto& t : buf.triples) freq(t.s * 2 + t.a) += 1.0 / buf.size();
      CHECK(max_abs_diff(freq, mu) <= 0.02);
    }
  }

  TEST_CASE("invalid sampling requests") {
    Env e = make_env("TwoStateDet");
    const Policy uni = Policy::uniform(2, 2);
    CHECK_THROWS_AS(sample_trajectories(e.mdp, uni, 0, 3, 0), ConfigError);
    CHECK_THROWS_AS(sample_trajectories(e.mdp, uni, 1, -1, 0), ConfigError);
    CHECK_THROWS_AS(sample_occupancy_buffer(e.mdp, uni, 10, DrawMode::kEpisodic, 0, 0), ConfigError);
  }
}
