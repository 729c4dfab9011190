#include "ppil/properties.hpp"

#include "ppil/baselines.hpp"
#include "ppil/bsge.hpp"
#include "ppil/envs.hpp"
#include "ppil/eval.hpp"
#include "ppil/lp.hpp"
#include "ppil/numeric.hpp"
#include "ppil/offline.hpp"
#include "ppil/ppm.hpp"
#include "ppil/rng.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace ppil {

namespace {

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(3);
  o << x;
  return o.str();
}

Policy random_policy(Rng& rng, int S, int A) {
  Matrix p(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) p(s, a) = -std::log(1.0 - rng.uniform());
    p.row(s) /= p.row(s).sum();
  }
  return Policy(p);
}

Vector random_vector(Rng& rng, int n, double lo, double hi) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = lo + (hi - lo) * rng.uniform();
  return v;
}

struct Suite {
  std::vector<PropertyResult> out;
  void check(const std::string& module, const std::string& name, const std::function<std::string(bool&)>& body) {
    PropertyResult r{module, name, false, ""};
    try {
      r.detail = body(r.passed);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(r));
  }
};

LogisticObjective random_objective(Rng& rng, const Env& env, double eta, double alpha) {
  const auto& mdp = env.mdp;
  const Policy pi = random_policy(rng, mdp.n_states(), mdp.n_actions());
  const Vector ref = fev(env.features, occupancy_measure(mdp, pi).mu());
  const Policy pe = random_policy(rng, mdp.n_states(), mdp.n_actions());
  const Vector rho = fev(env.features, occupancy_measure(mdp, pe).mu());
  return LogisticObjective(env.features, mdp.init_dist(), mdp.gamma(), PpmState{pi, ref, 1}, rho, eta, alpha);
}

}  // namespace

std::vector<PropertyResult> run_property_suite(std::uint64_t seed) {
  Suite suite;
  Rng rng(seed);
  std::vector<TabularMdp> mdps;
  for (int i = 0; i < 5; ++i) mdps.push_back(random_mdp(3 + i, 2 + i % 2, 0.85, derive_seed(seed, 100 + i)));

  suite.check("mdp_core", "flow feasibility and normalization", [&](bool& ok) {
    double worst = 0.0, norm = 0.0;
    for (const auto& m : mdps)
      for (int r = 0; r < 10; ++r) {
        const auto mu = occupancy_measure(m, random_policy(rng, m.n_states(), m.n_actions()), 1e-12);
        worst = std::max(worst, bellman_flow_residual(m, mu.mu()));
        norm = std::max(norm, std::abs(mu.mu().sum() - 1.0));
      }
    ok = worst <= 1e-11 && norm <= 1e-10;
    return "max residual " + fmt(worst) + ", max |sum-1| " + fmt(norm);
  });

  suite.check("mdp_core", "cost evaluation duality", [&](bool& ok) {
    double worst = 0.0;
    for (const auto& m : mdps)
      for (int r = 0; r < 10; ++r) {
        const Policy p = random_policy(rng, m.n_states(), m.n_actions());
        const Vector c = random_vector(rng, m.n_pairs(), 0.0, 1.0);
        const double a = occupancy_measure(m, p).mu().dot(c);
        const double b = (1.0 - m.gamma()) * m.init_dist().dot(policy_evaluation(m, p, c));
        worst = std::max(worst, std::abs(a - b));
      }
    ok = worst <= 1e-8;
    return "max gap " + fmt(worst);
  });

  suite.check("mdp_core", "occupancy round trip", [&](bool& ok) {
    double worst = 0.0;
    for (const auto& m : mdps)
      for (int r = 0; r < 10; ++r) {
        const Vector mu = occupancy_measure(m, random_policy(rng, m.n_states(), m.n_actions())).mu();
        const Vector back =
            occupancy_measure(m, policy_from_occupancy(OccupancyMeasure(mu), m.n_states(), m.n_actions())).mu();
        worst = std::max(worst, (mu - back).lpNorm<Eigen::Infinity>());
      }
    ok = worst <= 1e-8;
    return "max error " + fmt(worst);
  });

  suite.check("mdp_core", "greedy policy beats random policies", [&](bool& ok) {
    ok = true;
    for (const auto& m : mdps) {
      const auto vi = value_iteration(m, m.true_cost());
      const double best = total_cost(m, vi.greedy, m.true_cost());
      for (int r = 0; r < 100; ++r)
        ok = ok && best <= total_cost(m, random_policy(rng, m.n_states(), m.n_actions()), m.true_cost()) + 1e-10;
    }
    return std::string(ok ? "100 policies per MDP" : "a random policy did better");
  });

  suite.check("features", "FEV in simplex, excitation lower bound, reduced flow", [&](bool& ok) {
    ok = true;
    double worst_flow = 0.0;
    for (int i = 0; i < 5; ++i) {
      const Env e = random_linear_mdp(4, 2, 3, 0.9, derive_seed(seed, 200 + i));
      const Policy p = random_policy(rng, 4, 2);
      const Vector mu = occupancy_measure(e.mdp, p).mu();
      const Vector lam = fev(e.features, mu);
      ok = ok && numeric::is_probability_vector(lam, 1e-10);
      ok = ok && min_feature_excitation(e.features, mu) <= lam.minCoeff() + 1e-12;
      // B⊤d = γM⊤λ + (1−γ)ν0
      const Vector lhs = state_marginal(mu, 4, 2);
      const Vector rhs = e.mdp.gamma() * e.features.factor_m().transpose() * lam + (1.0 - e.mdp.gamma()) * e.mdp.init_dist();
      worst_flow = std::max(worst_flow, (lhs - rhs).lpNorm<Eigen::Infinity>());
    }
    ok = ok && worst_flow <= 1e-8;
    return "flow residual via λ " + fmt(worst_flow);
  });

  const Env tsd = make_env("TwoStateDet");
  const Env lin = random_linear_mdp(4, 2, 3, 0.9, derive_seed(seed, 300));

  suite.check("ppm", "shift invariance of G and V", [&](bool& ok) {
    double worst_g = 0.0, worst_v = 0.0;
    for (const Env* e : {&tsd, &lin}) {
      const auto obj = random_objective(rng, *e, 10.0, 1.0);
      for (int r = 0; r < 20; ++r) {
        const Vector w = numeric::project_simplex(random_vector(rng, obj.m(), 0.0, 1.0));
        const Vector th = random_vector(rng, obj.m(), -3.0, 3.0);
        const Vector th2 = (th.array() + 0.7).matrix();
        worst_g = std::max(worst_g, std::abs(obj.value(w, th) - obj.value(w, th2)));
        const Vector v1 = logistic_v(obj.state().policy, logistic_q(e->features, th), 1.0);
        const Vector v2 = logistic_v(obj.state().policy, logistic_q(e->features, th2), 1.0);
        worst_v = std::max(worst_v, ((v2.array() - 0.7) - v1.array()).abs().maxCoeff());
      }
    }
    ok = worst_g <= 1e-9 && worst_v <= 1e-12;
    return "G gap " + fmt(worst_g) + ", V gap " + fmt(worst_v);
  });

  suite.check("ppm", "concavity along random segments", [&](bool& ok) {
    double worst = 0.0;
    const auto obj = random_objective(rng, lin, 10.0, 1.0);
    for (int r = 0; r < 200; ++r) {
      const Vector w1 = numeric::project_simplex(random_vector(rng, 3, 0, 1));
      const Vector w2 = numeric::project_simplex(random_vector(rng, 3, 0, 1));
      const Vector t1 = random_vector(rng, 3, -5, 5), t2 = random_vector(rng, 3, -5, 5);
      const double mid = obj.value(0.5 * (w1 + w2), 0.5 * (t1 + t2));
      const double avg = 0.5 * (obj.value(w1, t1) + obj.value(w2, t2));
      worst = std::max(worst, avg - mid);
    }
    ok = worst <= 1e-10;
    return "max midpoint deficit " + fmt(worst);
  });

  suite.check("ppm", "gradient vs central differences", [&](bool& ok) {
    double worst = 0.0;
    const auto obj = random_objective(rng, lin, 10.0, 1.0);
    for (int r = 0; r < 20; ++r) {
      const Vector w = random_vector(rng, 3, -1, 1), th = random_vector(rng, 3, -2, 2);
      const auto e = obj.evaluate(w, th);
      Vector num(6);
      for (int j = 0; j < 6; ++j) {
        Vector w1 = w, w2 = w, t1 = th, t2 = th;
        (j < 3 ? w1(j) : t1(j - 3)) += 1e-6;
        (j < 3 ? w2(j) : t2(j - 3)) -= 1e-6;
        num(j) = (obj.value(w1, t1) - obj.value(w2, t2)) / 2e-6;
      }
      Vector an(6);
      an << e.grad_w, e.grad_theta;
      worst = std::max(worst, (an - num).norm() / std::max(an.norm(), 1e-8));
    }
    ok = worst <= 1e-5;
    return "max relative error " + fmt(worst);
  });

  suite.check("ppm", "λ* sums to one and matches the gradient", [&](bool& ok) {
    const auto obj = random_objective(rng, tsd, 10.0, 1.0);
    const auto e = obj.evaluate(random_vector(rng, 4, 0, 1), random_vector(rng, 4, -1, 1));
    const double gap = (e.grad_w - (e.lambda_star - obj.expert_fev())).lpNorm<Eigen::Infinity>();
    ok = std::abs(e.lambda_star.sum() - 1.0) <= 1e-10 && gap <= 1e-12;
    return "∇w − (λ* − ρ̂) = " + fmt(gap);
  });

  suite.check("bsge", "B̂ normalization and tabular ridge exactness", [&](bool& ok) {
    const Vector rho = numeric::project_simplex(random_vector(rng, 4, 0, 1));
    const Vector b = b_hat(random_vector(rng, 4, -1, 1), rho, 3.0);
    const double norm_gap = std::abs(rho.dot(b) - 1.0);
    TransitionBuffer buf;
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const int next = a == 0 ? s : 1 - s;
        buf.triples.push_back({s, a, next});
      }
    const Vector v = random_vector(rng, 2, -1, 1);
    const Vector mv = ridge_mv(buf, tsd.features, v, 0.0);
    const double exact_gap = (mv - tsd.mdp.transition() * v).lpNorm<Eigen::Infinity>();
    ok = norm_gap <= 1e-10 && exact_gap <= 1e-12;
    return "Σρ̂B̂ − 1 = " + fmt(norm_gap) + ", ‖M̂V − PV‖ = " + fmt(exact_gap);
  });

  suite.check("bsge", "conditional unbiasedness with exact plug-ins", [&](bool& ok) {
    const auto obj = random_objective(rng, tsd, 10.0, 1.0);
    const CriticParams x{numeric::project_simplex(random_vector(rng, 4, 0, 1)), random_vector(rng, 4, -1, 1)};
    const PlugIns plug = exact_plugins(obj, x);
    const SgdCriticProblem prob{tsd.features, tsd.mdp.init_dist(), tsd.mdp.gamma(), obj.state().policy,
                                obj.expert_fev(), 10.0, 1.0, WKind::kSimplex, 10.0};
    const auto mean = bsge_conditional_mean(prob, plug, obj.state().reference_fev);
    const auto e = obj.evaluate(x.w, x.theta);
    const double gap = std::max((mean.grad_w - e.grad_w).lpNorm<Eigen::Infinity>(),
                                (mean.grad_theta - e.grad_theta).lpNorm<Eigen::Infinity>());
    ok = gap <= 1e-10;
    return "max gap " + fmt(gap);
  });

  suite.check("offline", "DV minimum equals the log-sum-exp objective", [&](bool& ok) {
    const TransitionBuffer buf = sample_occupancy_buffer(
        lin.mdp, random_policy(rng, 4, 2), 50, DrawMode::kGeometric, derive_seed(seed, 400));
    const OfflineBatch batch = offline_batch_from_buffer(buf, lin.features, 4);
    const OfflineObjective obj(lin.features, batch, lin.mdp.init_dist(), lin.mdp.gamma(), 10.0, 1.0,
                               Nu0Mode::kExpertFlow);
    double worst = 0.0, concave = 0.0;
    for (int r = 0; r < 20; ++r) {
      const Vector w = random_vector(rng, 3, 0, 1), th = random_vector(rng, 3, -2, 2);
      const auto e = obj.evaluate(w, th);
      worst = std::max(worst, std::abs(obj.dv_saddle(w, th, e.z_star) - e.value));
      const Vector w2 = random_vector(rng, 3, 0, 1), th2 = random_vector(rng, 3, -2, 2);
      concave = std::max(concave, 0.5 * (e.value + obj.value(w2, th2)) - obj.value(0.5 * (w + w2), 0.5 * (th + th2)));
    }
    ok = worst <= 1e-8 && concave <= 1e-10;
    return "DV gap " + fmt(worst) + ", midpoint deficit " + fmt(concave);
  });

  suite.check("baselines", "PPM critic value dominates MD critic value", [&](bool& ok) {
    ok = true;
    double margin = 1e300;
    for (int r = 0; r < 3; ++r) {
      const auto obj = random_objective(rng, tsd, 10.0, 1.0);
      const LogisticObjective md(tsd.features, tsd.mdp.init_dist(), tsd.mdp.gamma(), obj.state(), obj.expert_fev(),
                                 10.0, 1.0, false);
      const double radius = theta_radius(0.0, tsd.mdp.gamma());
      const auto ppm = exact_critic(obj, WKind::kSimplex, radius, ExactCriticConfig{});
      const Vector wk = numeric::project_simplex(random_vector(rng, 4, 0, 1));
      const auto mdr = md_policy_eval(md, wk, radius, ExactCriticConfig{});
      const double md_value = mdr.value - obj.expert_fev().dot(wk);
      margin = std::min(margin, ppm.value - md_value);
      const Vector w_next = md_cost_update(wk, obj.expert_fev(), obj.state().reference_fev, 0.5);
      ok = ok && numeric::is_probability_vector(w_next, 1e-12);
    }
    ok = ok && margin >= -1e-6;
    return "min margin " + fmt(margin);
  });

  suite.check("lp_oracle", "strong duality and value-iteration agreement", [&](bool& ok) {
    double worst = 0.0;
    for (const auto& m : mdps) {
      const auto d = forward_q_lp(m, m.true_cost());
      const auto p = primal_q_lp(m, m.true_cost());
      const auto vi = value_iteration(m, m.true_cost(), 1e-12);
      const double v = (1.0 - m.gamma()) * m.init_dist().dot(vi.v);
      worst = std::max({worst, std::abs(d.value - p.value), std::abs(d.value - v)});
    }
    ok = worst <= 1e-6;
    return "max gap " + fmt(worst);
  });

  // With V = V*_{c_w} the certificate is tight: ε2 = 0 and ε1 is the
  // expert's regret under c_w, so small ε and small regret coincide.
  suite.check("lp_oracle", "certificate equals regret at the optimal value", [&](bool& ok) {
    double worst = 0.0;
    for (const auto& m : mdps) {
      const FeatureMap f = tabular_features(m);
      const Vector mu_e = occupancy_measure(m, random_policy(rng, m.n_states(), m.n_actions())).mu();
      const Vector w = numeric::project_simplex(random_vector(rng, f.m(), 0, 1));
      const Vector cw = f.phi() * w;
      const auto vi = value_iteration(m, cw, 1e-13);
      const double regret = mu_e.dot(cw) - (1.0 - m.gamma()) * m.init_dist().dot(vi.v);
      const Certificate c = eps_certificate(m, f, w, vi.v, mu_e);
      worst = std::max({worst, c.eps2, std::abs(c.eps1 - regret)});
    }
    ok = worst <= 1e-8;
    return "max |eps1 - regret|, eps2: " + fmt(worst);
  });

  suite.check("eval", "C-distance dominates excess cost", [&](bool& ok) {
    ok = true;
    for (int r = 0; r < 20; ++r) {
      const Policy p = random_policy(rng, 4, 2), pe = random_policy(rng, 4, 2);
      const Vector rho_e = fev(lin.features, occupancy_measure(lin.mdp, pe).mu());
      const Vector lam = fev(lin.features, occupancy_measure(lin.mdp, p).mu());
      const double dc = c_distance_fev(lam, rho_e, WKind::kSimplex);
      const Vector w = numeric::project_simplex(random_vector(rng, 3, 0, 1));
      ok = ok && dc >= w.dot(lam - rho_e) - 1e-12;
    }
    return std::string("20 random pairs");
  });

  suite.check("eval", "recovered cost invariant to constants", [&](bool& ok) {
    const Env g = make_env("WindyGrid");
    const Policy expert = generate_expert(g.mdp, g.mdp.true_cost(), ExpertKind::greedy());
    const auto a = recovered_cost_eval(g.mdp, g.mdp.true_cost(), expert);
    const auto b = recovered_cost_eval(g.mdp, (g.mdp.true_cost().array() + 0.3).matrix(), expert);
    ok = (a.greedy.probs() - b.greedy.probs()).cwiseAbs().maxCoeff() == 0.0 &&
         std::abs(a.normalized_return - 1.0) <= 1e-9;
    return "normalized return " + fmt(a.normalized_return);
  });

  suite.check("envs", "suite passes invariants and yields experts", [&](bool& ok) {
    ok = true;
    for (const auto& name : env_names()) {
      const Env e = make_env(name);
      const Policy p = generate_expert(e.mdp, e.mdp.true_cost(), ExpertKind::greedy());
      ok = ok && validate_linear_mdp(e.mdp, e.features) == 0.0 && p.n_states() == e.mdp.n_states();
    }
    return std::to_string(env_names().size()) + " environments";
  });

  return suite.out;
}

}  // namespace ppil
