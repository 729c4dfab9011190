#include "helpers.hpp"

#include "ppil/envs.hpp"
#include "ppil/eval.hpp"
#include "ppil/experiment.hpp"

using namespace ppil;
using testing_util::derived;
using testing_util::vec;

TEST_SUITE("eval") {
  TEST_CASE("C-distance of the uniform policy on the two-state chain") {
    Env e = make_env("TwoStateDet");
    const Vector expert_mu = io::vector_from_json(derived()["two_state_det"]["expert_mu"], "expert_mu");
    const double d = c_distance(e.mdp, Policy::uniform(2, 2), expert_mu, e.features, WKind::kSimplex);
    CHECK(d == doctest::Approx(derived()["two_state_det"]["c_distance_uniform_simplex"].get<double>()).epsilon(1e-12));
    const Vector uni = io::vector_from_json(derived()["two_state_det"]["uniform_mu"], "uniform_mu");
    CHECK(c_distance_fev(uni, expert_mu, WKind::kBall) == doctest::Approx((uni - expert_mu).norm()).epsilon(1e-12));
    CHECK(c_distance_fev(expert_mu, expert_mu, WKind::kSimplex) == 0.0);
  }

  TEST_CASE("normalized return of a mixed policy") {
    Env e = make_env("TwoStateDet");
    const Policy expert = Policy::deterministic({1, 0}, 2);
    const Policy mid((Matrix(2, 2) << 0.5, 0.5, 0.8, 0.2).finished());
    CHECK(normalized_return(e.mdp, mid, expert) ==
          doctest::Approx(derived()["two_state_det"]["normalized_return_mid_policy"].get<double>()).epsilon(1e-12));
  }

  TEST_CASE("scale endpoints") {
    for (const std::string& name : env_names()) {
      Trial tr = make_trial(name, {}, 0);
      const auto& mdp = tr.env.mdp;
      CHECK(normalized_return(mdp, tr.expert, tr.expert) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(normalized_return(mdp, Policy::uniform(mdp.n_states(), mdp.n_actions()), tr.expert)) <= 1e-12);
      CHECK(tr.scale.normalize(policy_return(mdp, tr.expert)) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(policy_return(mdp, tr.expert) == doctest::Approx(-total_cost(mdp, tr.expert, mdp.true_cost())));
    }
  }

  TEST_CASE("true cost recovers the expert") {
    Trial tr = make_trial("RiverSwim", {}, 0);
    const RecoveredCostReport r = recovered_cost_eval(tr.env.mdp, tr.env.mdp.true_cost(), tr.expert);
    CHECK(r.normalized_return == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(testing_util::max_abs_diff(r.v_recovered, r.v_true) <= 1e-9);
  }

  TEST_CASE("transfer with the true cost") {
    Trial tr = make_trial("WindyGrid", {}, 0);
    const TabularMdp target = permute_actions(tr.env.mdp, windy_swap_permutation());
    const TransferReport r = transfer_eval(tr.env.mdp, target, tr.env.mdp.true_cost(), tr.expert);
    CHECK(r.recovered_target == doctest::Approx(r.optimal_target).epsilon(1e-10));
    CHECK(r.learned == doctest::Approx(r.expert_source).epsilon(1e-12));
    CHECK(r.expert_source < r.optimal_target);
  }
}
