#include "helpers.hpp"
#include "oracles/oracles.hpp"

#include "ppil/envs.hpp"
#include "ppil/mdp.hpp"
#include "ppil/rng.hpp"

#include <cmath>

using namespace ppil;
using testing_util::derived;
using testing_util::max_abs_diff;
using testing_util::vec;

namespace {

Policy two_state_expert() {
  return Policy::deterministic({1, 0}, 2);  // switch at 0, stay at 1
}

Vector json_vec(const io::Json& j) { return io::vector_from_json(j, "fixture"); }

Policy random_policy(int S, int A, Rng& rng) {
  Matrix p(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) p(s, a) = 0.05 + rng.uniform();
    p.row(s) /= p.row(s).sum();
  }
  return Policy(p);
}

}  // namespace

TEST_SUITE("mdp_core") {
  TEST_CASE("construction rejects malformed inputs") {
    Matrix p = Matrix::Constant(4, 2, 0.5);
    Vector nu = vec({1.0, 0.0});
    Vector c = Vector::Zero(4);
    CHECK_NOTHROW(TabularMdp(2, 2, p, nu, c, 0.9));
    Matrix bad = p;
    bad(0, 0) = 0.7;
    CHECK_THROWS_AS(TabularMdp(2, 2, bad, nu, c, 0.9), ConfigError);
    CHECK_THROWS_AS(TabularMdp(2, 2, p, vec({0.5, 0.6}), c, 0.9), ConfigError);
    CHECK_THROWS_AS(TabularMdp(2, 2, p, nu, c, 1.0), ConfigError);
    CHECK_THROWS_AS(TabularMdp(2, 2, p, nu, Vector::Zero(3), 0.9), ConfigError);
    CHECK_THROWS_AS(Policy(Matrix::Constant(2, 2, 0.4)), ConfigError);
  }

  TEST_CASE("expert occupancy on the two-state chain") {
    Env e = make_env("TwoStateDet");
    const Vector mu = occupancy_measure(e.mdp, two_state_expert()).mu();
    const Vector expected = json_vec(derived()["two_state_det"]["expert_mu"]);
    CHECK(max_abs_diff(mu, expected) <= 1e-12);
    CHECK(max_abs_diff(mu, oracle::occupancy_power_series(e.mdp, two_state_expert())) <= 1e-12);
  }

  TEST_CASE("uniform occupancy matches the power-series oracle and the fixture") {
    Env e = make_env("TwoStateDet");
    const Policy uni = Policy::uniform(2, 2);
    const Vector mu = occupancy_measure(e.mdp, uni).mu();
    CHECK(max_abs_diff(mu, oracle::occupancy_power_series(e.mdp, uni)) <= 1e-12);
    CHECK(max_abs_diff(mu, json_vec(derived()["two_state_det"]["uniform_mu"])) <= 1e-12);
    CHECK(mu.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("occupancy round trip on random MDPs") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const TabularMdp mdp = random_mdp(4, 3, 0.85, 100 + trial);
      const Policy pi = random_policy(4, 3, rng);
      const OccupancyMeasure mu = occupancy_measure(mdp, pi);
      const Policy back = policy_from_occupancy(mu, 4, 3);
      CHECK((back.probs() - pi.probs()).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(max_abs_diff(occupancy_measure(mdp, back).mu(), mu.mu()) <= 1e-8);
      CHECK(bellman_flow_residual(mdp, mu.mu()) <= 1e-10);
    }
  }

  TEST_CASE("unvisited states get the uniform row") {
    const Policy pi = policy_from_occupancy(OccupancyMeasure(vec({0.0, 1.0, 0.0, 0.0})), 2, 2);
    CHECK(pi(1, 0) == doctest::Approx(0.5));
    CHECK(pi(0, 1) == doctest::Approx(1.0));
  }

  TEST_CASE("total cost of the expert") {
    Env e = make_env("TwoStateDet");
    CHECK(total_cost(e.mdp, two_state_expert(), e.mdp.true_cost()) == doctest::Approx(0.1).epsilon(1e-12));
  }

  TEST_CASE("value iteration on the two-state chain") {
    Env e = make_env("TwoStateDet");
    const auto vi = value_iteration(e.mdp, e.mdp.true_cost(), 1e-12);
    const Vector v_star = json_vec(derived()["two_state_det"]["v_star"]);
    CHECK(max_abs_diff(vi.v, v_star) <= 1e-9);
    CHECK(max_abs_diff(vi.v, oracle::brute_force_optimal_v(e.mdp, e.mdp.true_cost())) <= 1e-9);
    CHECK((vi.greedy.probs() - two_state_expert().probs()).cwiseAbs().maxCoeff() == 0.0);
    // Q(s,a) = c + γ P V
    CHECK(max_abs_diff(vi.q, q_from_v(e.mdp, e.mdp.true_cost(), vi.v)) <= 1e-9);
  }

  TEST_CASE("value iteration agrees with policy enumeration on random MDPs") {
    for (int i = 0; i < 10; ++i) {
      const TabularMdp mdp = random_mdp(4, 3, 0.9, 7 + i);
      const auto vi = value_iteration(mdp, mdp.true_cost(), 1e-12);
      CHECK(max_abs_diff(vi.v, oracle::brute_force_optimal_v(mdp, mdp.true_cost())) <= 1e-8);
    }
  }

  TEST_CASE("greedy ties go to the lowest action") {
    const Policy g = greedy_policy(vec({1.0, 1.0, 0.5, 0.5 + 1e-12}), 2, 2);
    CHECK(g(0, 0) == 1.0);
    CHECK(g(1, 0) == 1.0);
  }

  TEST_CASE("flow residual of an infeasible vector") {
    Env e = make_env("TwoStateDet");
    const double r = bellman_flow_residual(e.mdp, Vector::Constant(4, 0.25));
    CHECK(r > 0.0);
    CHECK(r == doctest::Approx(derived()["two_state_det"]["flow_residual_uniform_vector"].get<double>()).epsilon(1e-12));
  }

  TEST_CASE("soft value iteration limits") {
    Env e = make_env("TwoStateDet");
    const auto hard = value_iteration(e.mdp, e.mdp.true_cost(), 1e-12);
    const auto soft = soft_value_iteration(e.mdp, e.mdp.true_cost(), 1000.0, 1e-12);
    CHECK(max_abs_diff(soft.v, hard.v) <= 0.01);
    // c ≡ 0: every backup subtracts log(A)/α, so V = −log(A)/(α(1−γ)).
    const auto zero = soft_value_iteration(e.mdp, Vector::Zero(4), 2.0, 1e-12);
    const double expected = -std::log(2.0) / (2.0 * (1.0 - 0.9));
    CHECK(max_abs_diff(zero.v, Vector::Constant(2, expected)) <= 1e-8);
  }

  TEST_CASE("action permutation relabels dynamics") {
    Env e = make_env("WindyGrid");
    const std::vector<int> perm = windy_swap_permutation();
    const TabularMdp swapped = permute_actions(e.mdp, perm);
    for (int s = 0; s < e.mdp.n_states(); ++s)
      for (int a = 0; a < 4; ++a)
        CHECK((swapped.transition().row(swapped.index(s, a)) - e.mdp.transition().row(e.mdp.index(s, perm[a])))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
  }
}
