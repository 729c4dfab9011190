#include "helpers.hpp"
#include "oracles/oracles.hpp"

#include "ppil/baselines.hpp"
#include "ppil/experiment.hpp"

using namespace ppil;
using testing_util::derived;
using testing_util::max_abs_diff;
using testing_util::vec;

TEST_SUITE("baselines") {
  TEST_CASE("cost step is an exponentiated-gradient update") {
    const Vector pair = io::vector_from_json(derived()["softmax_pair"], "softmax_pair");
    const Vector w = md_cost_update(vec({0.5, 0.5}), vec({0.0, 1.0}), vec({0.0, 0.0}), 1.0);
    CHECK(max_abs_diff(w, pair) <= 1e-12);
    // matched features leave the cost unchanged
    CHECK(max_abs_diff(md_cost_update(vec({0.2, 0.8}), vec({0.4, 0.6}), vec({0.4, 0.6}), 3.0), vec({0.2, 0.8})) <=
          1e-15);
  }

  TEST_CASE("policy-evaluation objective gradient matches central differences") {
    Trial tr = make_trial("SingleChain", {}, 0);
    const auto& mdp = tr.env.mdp;
    const Policy prev = Policy::uniform(mdp.n_states(), mdp.n_actions());
    const Vector ref = fev(tr.env.features, occupancy_measure(mdp, prev).mu());
    const LogisticObjective obj(tr.env.features, mdp.init_dist(), mdp.gamma(), PpmState{prev, ref, 1}, tr.expert_fev,
                                10.0, 1.0, false);
    const int m = obj.m();
    for (int k = 0; k < 10; ++k) {
      Vector w = Vector::Constant(m, 1.0 / m);
      Vector th = Vector::LinSpaced(m, -0.5, 0.5 + 0.1 * k);
      const auto ev = obj.evaluate(w, th);
      CHECK(oracle::rel_err(ev.grad_theta, oracle::central_diff([&](const Vector& t) { return obj.value(w, t); }, th)) <=
            1e-5);
      // without the expert term ∇_w is λ* alone
      CHECK(max_abs_diff(ev.grad_w, ev.lambda_star) <= 1e-12);
    }
  }

  TEST_CASE("policy evaluation keeps w fixed and reaches stationarity") {
    Trial tr = make_trial("TwoStateDet", {}, 0);
    const auto& mdp = tr.env.mdp;
    const Policy prev = Policy::uniform(2, 2);
    const Vector ref = fev(tr.env.features, occupancy_measure(mdp, prev).mu());
    const LogisticObjective obj(tr.env.features, mdp.init_dist(), mdp.gamma(), PpmState{prev, ref, 1}, tr.expert_fev,
                                10.0, 1.0, false);
    ExactCriticConfig cfg;
    cfg.tol = 1e-8;
    cfg.max_iters = 50000;
    for (const Vector& w : {Vector(Vector::Zero(4)), vec({0.25, 0.25, 0.25, 0.25}), vec({1.0, 0.0, 0.0, 0.0})}) {
      const CriticResult r = md_policy_eval(obj, w, 50.0, cfg);
      CHECK(r.converged);
      CHECK(max_abs_diff(r.params.w, w) == 0.0);
      CHECK(obj.evaluate(w, r.params.theta).grad_theta.norm() <= 1e-6);
    }
  }

  TEST_CASE("mirror descent imitates the two-state expert") {
    Trial tr = make_trial("TwoStateDet", {}, 0);
    MdConfig cfg;
    cfg.K = 200;
    cfg.beta = md_beta_preset("TwoStateDet");
    const RunResult r = run_md(tr, cfg);
    CHECK(r.log.size() == 200);
    CHECK(normalized_return(tr.env.mdp, r.last_policy(), tr.expert) >= 0.9);
    CHECK(md_beta_preset("NoSuchEnv") == 0.5);
  }
}
