#include "helpers.hpp"

#include "ppil/bsge.hpp"
#include "ppil/experiment.hpp"
#include "ppil/numeric.hpp"

#include <cmath>

using namespace ppil;
using testing_util::derived;
using testing_util::max_abs_diff;
using testing_util::vec;

namespace {

struct Fixture {
  Trial trial;
  Policy prev;
  Vector ref;
  Vector prev_mu;
};

Fixture fixture(const char* env_name) {
  Trial tr = make_trial(env_name, {}, 0);
  const int S = tr.env.mdp.n_states(), A = tr.env.mdp.n_actions();
  Matrix p(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) p(s, a) = 1.0 + 0.3 * ((s + 2 * a) % 3);
  for (int s = 0; s < S; ++s) p.row(s) /= p.row(s).sum();
  Policy prev(p);
  const Vector mu = occupancy_measure(tr.env.mdp, prev).mu();
  Vector ref = fev(tr.env.features, mu);
  return {std::move(tr), std::move(prev), std::move(ref), mu};
}

SgdCriticProblem problem_of(const Fixture& f, double radius = 20.0) {
  return SgdCriticProblem{f.trial.env.features, f.trial.env.mdp.init_dist(), f.trial.env.mdp.gamma(), f.prev,
                          f.trial.expert_fev, 10.0, 1.0, WKind::kSimplex, radius};
}

LogisticObjective objective_of(const Fixture& f) {
  return LogisticObjective(f.trial.env.features, f.trial.env.mdp.init_dist(), f.trial.env.mdp.gamma(),
                           PpmState{f.prev, f.ref, 2}, f.trial.expert_fev, 10.0, 1.0);
}

CriticParams some_point(int m) {
  Vector w(m), th(m);
  for (int i = 0; i < m; ++i) {
    w(i) = 1.0 + i % 3;
    th(i) = 0.5 * std::sin(1.0 + i);
  }
  return {w / w.sum(), th};
}

}  // namespace

TEST_SUITE("bsge") {
  TEST_CASE("B-hat on two coordinates matches the fixture") {
    const Vector b = b_hat(vec({0.0, 0.1}), vec({0.5, 0.5}), 10.0);
    CHECK(max_abs_diff(b, io::vector_from_json(derived()["b_hat_pair"], "b_hat_pair")) <= 1e-12);
  }

  TEST_CASE("B-hat is normalized against rho-hat") {
    Fixture f = fixture("RiverSwim");
    const Vector delta = Vector::LinSpaced(f.ref.size(), -0.4, 0.9);
    CHECK(f.ref.dot(b_hat(delta, f.ref, 10.0)) == doctest::Approx(1.0).epsilon(1e-12));
    // a constant shift of δ leaves B-hat unchanged
    CHECK(max_abs_diff(b_hat(delta, f.ref, 10.0), b_hat((delta.array() + 3.0).matrix(), f.ref, 10.0)) <= 1e-12);
  }

  TEST_CASE("ridge with tabular features and no penalty is the empirical mean") {
    Fixture f = fixture("TwoStateStochastic");
    const TransitionBuffer buf =
        sample_occupancy_buffer(f.trial.env.mdp, f.prev, 500, DrawMode::kGeometric, 11);
    const Vector v = vec({0.3, -1.2});
    const int A = 2;
    Vector sum = Vector::Zero(4), cnt = Vector::Zero(4);
    for (const auto& t : buf.triples) {
      sum(t.s * A + t.a) += v(t.s_next);
      cnt(t.s * A + t.a) += 1.0;
    }
    REQUIRE(cnt.minCoeff() > 0.0);
    const Vector expected = sum.cwiseQuotient(cnt);
    CHECK(max_abs_diff(ridge_mv(buf, f.trial.env.features, v, 0.0), expected) <= 1e-12);
    // fewer rows: the first N triples only
    Vector sum2 = Vector::Zero(4), cnt2 = Vector::Zero(4);
    for (int n = 0; n < 100; ++n) {
      const auto& t = buf.triples[n];
      sum2(t.s * A + t.a) += v(t.s_next);
      cnt2(t.s * A + t.a) += 1.0;
    }
    if (cnt2.minCoeff() > 0.0)
      CHECK(max_abs_diff(ridge_mv(buf, f.trial.env.features, v, 0.0, 100), sum2.cwiseQuotient(cnt2)) <= 1e-12);
  }

  TEST_CASE("ridge shrinks to zero as the penalty grows") {
    Fixture f = fixture("RiverSwim");
    const TransitionBuffer buf = sample_occupancy_buffer(f.trial.env.mdp, f.prev, 200, DrawMode::kGeometric, 3);
    const Vector v = Vector::Constant(f.trial.env.mdp.n_states(), 1.0);
    CHECK(ridge_mv(buf, f.trial.env.features, v, 1e12).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(ridge_gamma(buf, f.trial.env.features, f.prev, 1e12).cwiseAbs().maxCoeff() <= 1e-10);
  }

  TEST_CASE("Gamma-hat approaches the model with ample data") {
    Fixture f = fixture("TwoStateStochastic");
    const LogisticObjective obj = objective_of(f);
    const CriticParams x = some_point(4);
    const Policy pt = obj.policy_theta(x.theta);
    // roughly 10^4 triples for the least visited pair
    const double min_mu = f.prev_mu.minCoeff();
    const int n = static_cast<int>(std::ceil(1e4 / min_mu));
    const TransitionBuffer buf = sample_occupancy_buffer(f.trial.env.mdp, f.prev, n, DrawMode::kGeometric, 5);
    const Matrix g_hat = ridge_gamma(buf, f.trial.env.features, pt, 0.0);
    CHECK((g_hat - obj.gamma_matrix(x.theta)).cwiseAbs().maxCoeff() <= 0.05);
  }

  TEST_CASE("conditional mean equals enumeration over the draws") {
    Fixture f = fixture("WideTree");
    const SgdCriticProblem prob = problem_of(f);
    const LogisticObjective obj = objective_of(f);
    const CriticParams x = some_point(obj.m());
    const PlugIns plug = exact_plugins(obj, x);
    const int S = f.trial.env.mdp.n_states(), A = f.trial.env.mdp.n_actions(), m = obj.m();
    const Matrix& phi = f.trial.env.features.phi();
    Vector gw = Vector::Zero(m), gt = Vector::Zero(m);
    for (int j = 0; j < S * A; ++j) {
      if (f.prev_mu(j) == 0.0) continue;
      for (int i = 0; i < m; ++i) {
        if (phi(j, i) == 0.0) continue;
        for (int s0 = 0; s0 < S; ++s0) {
          if (f.trial.env.mdp.init_dist()(s0) == 0.0) continue;
          for (int a0 = 0; a0 < A; ++a0) {
            const double p = f.prev_mu(j) * phi(j, i) * f.trial.env.mdp.init_dist()(s0) * plug.policy_theta(s0, a0);
            const GradientSample g = assemble_gradient(prob, plug, i, s0, a0);
            gw += p * g.grad_w;
            gt += p * g.grad_theta;
          }
        }
      }
    }
    const GradientSample mean = bsge_conditional_mean(prob, plug, f.ref);
    CHECK(max_abs_diff(mean.grad_w, gw) <= 1e-12);
    CHECK(max_abs_diff(mean.grad_theta, gt) <= 1e-12);
  }

  TEST_CASE("estimator is unbiased with exact plug-ins") {
    for (const char* name : {"TwoStateDet", "RiverSwim", "WideTree"}) {
      Fixture f = fixture(name);
      const SgdCriticProblem prob = problem_of(f);
      const LogisticObjective obj = objective_of(f);
      const CriticParams x = some_point(obj.m());
      const GradientSample mean = bsge_conditional_mean(prob, exact_plugins(obj, x), f.ref);
      const auto ev = obj.evaluate(x.w, x.theta);
      CHECK(max_abs_diff(mean.grad_w, ev.grad_w) <= 1e-10);
      CHECK(max_abs_diff(mean.grad_theta, ev.grad_theta) <= 1e-10);
    }
  }

  TEST_CASE("sample average of the estimator approaches its conditional mean") {
    Fixture f = fixture("TwoStateStochastic");
    const SgdCriticProblem prob = problem_of(f);
    const LogisticObjective obj = objective_of(f);
    const CriticParams x = some_point(4);
    const PlugIns plug = exact_plugins(obj, x);
    const int n = 40000;
    const TransitionBuffer buf = sample_occupancy_buffer(f.trial.env.mdp, f.prev, n, DrawMode::kGeometric, 9);
    Rng rng(4);
    const GradientSample avg = bsge(prob, x, plug, buf, 0, rng, n);
    const GradientSample mean = bsge_conditional_mean(prob, plug, f.ref);
    // B-hat ≤ 1/min ρ, so 5 standard errors stay below this
    CHECK(max_abs_diff(avg.grad_w, mean.grad_w) <= 0.1);
    CHECK(max_abs_diff(avg.grad_theta, mean.grad_theta) <= 0.1);
  }

  TEST_CASE("default chi follows the c log(m/delta)/(beta N) rule") {
    Fixture f = fixture("RiverSwim");
    const TransitionBuffer buf = sample_occupancy_buffer(f.trial.env.mdp, f.prev, 400, DrawMode::kGeometric, 2);
    RidgeState rs(buf, f.trial.env.features, f.trial.env.mdp.n_states());
    rs.set_n(400);
    const double beta = std::max(numeric::min_eigenvalue(rs.cov()), 1e-3);
    const double m = f.trial.env.features.m();
    CHECK(rs.default_chi(0.3, 0.1, 1e-3) == doctest::Approx(0.3 * std::log(m / 0.1) / (beta * 400.0)).epsilon(1e-12));
    CHECK(rs.rho_hat().sum() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("SGD critic stays feasible and approaches the optimum") {
    Fixture f = fixture("TwoStateDet");
    const double radius = 20.0;
    const SgdCriticProblem prob = problem_of(f, radius);
    const LogisticObjective obj = objective_of(f);
    ExactCriticConfig ec;
    ec.tol = 1e-9;
    ec.max_iters = 100000;
    const double g_star = exact_critic(obj, WKind::kSimplex, radius, ec).value;
    SgdCriticConfig cfg;
    cfg.T = 2000;
    cfg.beta0 = 0.3;
    const TransitionBuffer buf =
        sample_occupancy_buffer(f.trial.env.mdp, f.prev, sgd_buffer_size(cfg), DrawMode::kGeometric, 21);
    const SgdCriticResult r = sgd_critic(
        prob, buf, cfg, 7, [&](const CriticParams& p) { return g_star - obj.value(p.w, p.theta); }, 100);
    CHECK(numeric::is_probability_vector(r.params.w, 1e-12));
    CHECK(r.params.theta.cwiseAbs().maxCoeff() <= radius + 1e-12);
    CHECK(g_star - obj.value(r.params.w, r.params.theta) <= 0.05);
    CHECK(r.diagnostics.size() == 20);
    CHECK(r.diagnostics.back().g_gap == doctest::Approx(g_star - obj.value(r.params.w, r.params.theta)));
  }

  TEST_CASE("buffer size requirements are enforced") {
    Fixture f = fixture("TwoStateDet");
    SgdCriticConfig cfg;
    cfg.T = 10;
    cfg.n0 = 2;
    CHECK(sgd_buffer_size(cfg) == 2 * 10 + 10);
    const TransitionBuffer small = sample_occupancy_buffer(f.trial.env.mdp, f.prev, 5, DrawMode::kGeometric, 1);
    CHECK_THROWS_AS(sgd_critic(problem_of(f), small, cfg, 0), ConfigError);
    CHECK_THROWS_AS(bsge(problem_of(f), some_point(4), 5, small, 0), ConfigError);
  }
}
