#include "helpers.hpp"
#include "oracles/oracles.hpp"

#include "ppil/experiment.hpp"
#include "ppil/numeric.hpp"
#include "ppil/offline.hpp"

#include <cmath>

using namespace ppil;
using testing_util::max_abs_diff;
using testing_util::vec;

namespace {

// Every (s, a, s') with weight μ_E(s,a) P(s'|s,a): the population batch.
OfflineBatch population_batch(const Trial& tr) {
  const auto& mdp = tr.env.mdp;
  const int S = mdp.n_states(), A = mdp.n_actions();
  OfflineBatch b;
  b.n_states = S;
  b.n_actions = A;
  std::vector<double> w;
  for (int j = 0; j < S * A; ++j)
    for (int s2 = 0; s2 < S; ++s2) {
      const double p = tr.expert_mu(j) * mdp.transition()(j, s2);
      if (p <= 0.0) continue;
      b.triples.push_back({j / A, j % A, s2});
      w.push_back(p);
    }
  b.weights = Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
  b.weights /= b.weights.sum();
  b.expert_fev_hat = fev(tr.env.features, tr.expert_mu);
  return b;
}

CriticParams point(int m, double shift) {
  Vector w(m), th(m);
  for (int i = 0; i < m; ++i) {
    w(i) = 1.0 + (i * 7 % 5);
    th(i) = std::cos(shift + i);
  }
  return {w / w.sum(), th};
}

}  // namespace

TEST_SUITE("offline") {
  TEST_CASE("single transition reduces to the plain Bellman residual") {
    Trial tr = make_trial("TwoStateDet", {}, 0);
    OfflineBatch b;
    b.triples = {{0, 1, 1}};
    b.weights = vec({1.0});
    b.expert_fev_hat = vec({0.0, 1.0, 0.0, 0.0});
    b.n_states = 2;
    b.n_actions = 2;
    const Vector w = vec({0.1, 0.2, 0.3, 0.4});
    const Vector th = vec({0.5, -0.2, 0.1, 0.7});
    const OfflineObjective obj(tr.env.features, b, tr.env.mdp.init_dist(), 0.9, 10.0, 1.0, Nu0Mode::kKnownNu0);
    const Vector v = obj.v(th);
    // V(s) = −log(½e^{−θ_{s0}} + ½e^{−θ_{s1}})
    CHECK(v(1) == doctest::Approx(-std::log(0.5 * std::exp(-0.1) + 0.5 * std::exp(-0.7))).epsilon(1e-12));
    const double delta = w(1) + 0.9 * v(1) - th(1);
    const double expected = -w(1) + delta + 0.1 * v(0);
    CHECK(obj.value(w, th) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(offline_objective(w, th, tr.env.features, b, tr.env.mdp.init_dist(), 0.9, Nu0Mode::kKnownNu0, 10.0, 1.0) ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("DV minimizer is a softmax and closes the saddle") {
    const Vector delta = vec({0.2, -0.1, 0.4});
    const Vector p = vec({0.5, 0.3, 0.2});
    const Vector z = dv_minimizer(delta, p, 2.0);
    Vector expect = (p.array() * (-2.0 * delta.array()).exp()).matrix();
    expect /= expect.sum();
    CHECK(max_abs_diff(z, expect) <= 1e-15);

    Trial tr = make_trial("RiverSwim", {}, 0);
    const TransitionBuffer buf = sample_occupancy_buffer(tr.env.mdp, tr.expert, 300, DrawMode::kGeometric, 1);
    const OfflineBatch b = offline_batch_from_buffer(buf, tr.env.features, tr.env.mdp.n_states());
    for (Nu0Mode mode : {Nu0Mode::kKnownNu0, Nu0Mode::kExpertFlow}) {
      const OfflineObjective obj(tr.env.features, b, tr.env.mdp.init_dist(), tr.env.mdp.gamma(), 10.0, 1.0, mode);
      const CriticParams x = point(obj.m(), 0.3);
      const auto ev = obj.evaluate(x.w, x.theta);
      CHECK(ev.z_star.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(obj.dv_saddle(x.w, x.theta, ev.z_star) == doctest::Approx(ev.value).epsilon(1e-10));
      // z* minimizes the saddle: any other z does worse
      Vector z2 = 0.7 * ev.z_star + 0.3 * b.weights;
      CHECK(obj.dv_saddle(x.w, x.theta, z2) >= ev.value - 1e-12);
    }
  }

  TEST_CASE("offline gradient matches central differences") {
    Trial tr = make_trial("DoubleChain", {}, 0);
    const TransitionBuffer buf = sample_occupancy_buffer(tr.env.mdp, tr.expert, 200, DrawMode::kGeometric, 4);
    const OfflineBatch b = offline_batch_from_buffer(buf, tr.env.features, tr.env.mdp.n_states());
    const OfflineObjective obj(tr.env.features, b, tr.env.mdp.init_dist(), tr.env.mdp.gamma(), 10.0, 1.0,
                               Nu0Mode::kExpertFlow);
    for (int k = 0; k < 10; ++k) {
      const CriticParams x = point(obj.m(), 0.7 * k);
      const auto ev = obj.evaluate(x.w, x.theta);
      CHECK(oracle::rel_err(ev.grad_w, oracle::central_diff([&](const Vector& w) { return obj.value(w, x.theta); }, x.w)) <= 1e-5);
      CHECK(oracle::rel_err(ev.grad_theta,
                            oracle::central_diff([&](const Vector& t) { return obj.value(x.w, t); }, x.theta)) <= 1e-5);
    }
  }

  TEST_CASE("population batch on a deterministic chain equals the state-action form") {
    Trial tr = make_trial("TwoStateDet", {}, 0);
    const OfflineBatch b = population_batch(tr);
    const auto& mdp = tr.env.mdp;
    for (Nu0Mode mode : {Nu0Mode::kKnownNu0, Nu0Mode::kExpertFlow}) {
      const OfflineObjective obj(tr.env.features, b, mdp.init_dist(), mdp.gamma(), 10.0, 1.0, mode);
      for (int k = 0; k < 5; ++k) {
        const CriticParams x = point(4, k);
        const BiasReport r = feature_vs_sa_bias(x.w, x.theta, tr.expert_mu, tr.env.features, mdp.init_dist(),
                                                mdp.gamma(), 10.0, 1.0, tr.beta_hat);
        CHECK(obj.value(x.w, x.theta) == doctest::Approx(r.g_sa).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("stochastic transitions only lower the population objective") {
    Trial tr = make_trial("TwoStateStochastic", {}, 0);
    const OfflineBatch b = population_batch(tr);
    const auto& mdp = tr.env.mdp;
    const OfflineObjective known(tr.env.features, b, mdp.init_dist(), mdp.gamma(), 10.0, 1.0, Nu0Mode::kKnownNu0);
    const OfflineObjective flow(tr.env.features, b, mdp.init_dist(), mdp.gamma(), 10.0, 1.0, Nu0Mode::kExpertFlow);
    for (int k = 0; k < 5; ++k) {
      const CriticParams x = point(4, k);
      const BiasReport r = feature_vs_sa_bias(x.w, x.theta, tr.expert_mu, tr.env.features, mdp.init_dist(),
                                              mdp.gamma(), 10.0, 1.0, tr.beta_hat);
      CHECK(known.value(x.w, x.theta) <= r.g_sa + 1e-12);
      // the flow identity makes both ν0 evaluations agree on exact expert flows
      CHECK(flow.value(x.w, x.theta) == doctest::Approx(known.value(x.w, x.theta)).epsilon(1e-10));
    }
  }

  TEST_CASE("feature and state-action forms agree within the bias bound") {
    // the merged goal feature makes the two forms differ
    Trial tr = make_trial("WindyGrid", {}, 0);
    const auto& mdp = tr.env.mdp;
    const double beta = std::max(tr.beta_hat, 1e-3);
    const double b = 1.0 + 2.0 * (1.0 + std::abs(std::log(beta))) / (1.0 - mdp.gamma());
    const double eta = 1.0 / b;
    for (int k = 0; k < 5; ++k) {
      const CriticParams x = point(tr.env.features.m(), k);
      const BiasReport r = feature_vs_sa_bias(x.w, x.theta, tr.expert_mu, tr.env.features, mdp.init_dist(),
                                              mdp.gamma(), eta, 1.0, beta);
      CHECK(r.b == doctest::Approx(b).epsilon(1e-12));
      REQUIRE(r.bound_applies);
      CHECK(r.gap <= r.bound);
    }
    // tabular features: the two forms coincide
    Trial rs = make_trial("RiverSwim", {}, 0);
    const CriticParams x = point(rs.env.features.m(), 1.0);
    const BiasReport r = feature_vs_sa_bias(x.w, x.theta, rs.expert_mu, rs.env.features, rs.env.mdp.init_dist(),
                                            rs.env.mdp.gamma(), 10.0, 1.0, 0.5);
    CHECK(r.gap <= 1e-12);
    CHECK_FALSE(r.bound_applies);
  }

  TEST_CASE("offline learner recovers the two-state expert from 500 transitions") {
    Trial tr = make_trial("TwoStateDet", {}, 0);
    const TransitionBuffer buf = sample_occupancy_buffer(tr.env.mdp, tr.expert, 500, DrawMode::kGeometric, 3);
    const OfflineBatch b = offline_batch_from_buffer(buf, tr.env.features, tr.env.mdp.n_states());
    OfflineConfig cfg;
    const OfflineResult r = op2il_run(tr.env.features, tr.env.mdp.init_dist(), tr.env.mdp.gamma(), b, cfg);
    CHECK(r.converged);
    CHECK(normalized_return(tr.env.mdp, r.policy, tr.expert) >= 0.9);
    CHECK(r.alpha_theory > 0.0);
  }

  TEST_CASE("discount-weighted dataset batch") {
    Trial tr = make_trial("TwoStateDet", {}, 0, 4, 3);
    const OfflineBatch b = offline_batch_from_dataset(tr.data, tr.env.features);
    CHECK(b.size() == 12);
    CHECK(b.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.weights(1) / b.weights(0) == doctest::Approx(tr.env.mdp.gamma()).epsilon(1e-12));
    CHECK(max_abs_diff(b.expert_fev_hat, empirical_fev(tr.data, tr.env.features)) == 0.0);
    CHECK_THROWS_AS(offline_batch_from_buffer(TransitionBuffer{}, tr.env.features, 2), ConfigError);
  }
}
