#include "ppil/baselines.hpp"

#include "ppil/numeric.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace ppil {

CriticResult md_policy_eval(const LogisticObjective& objective, const Vector& w_k, double radius,
                            const ExactCriticConfig& config, const std::optional<Vector>& theta_init) {
  if (objective.with_expert_term())
    throw ConfigError("md_policy_eval: objective must omit the expert term");
  if (w_k.size() != objective.m()) throw ConfigError("md_policy_eval: w must have length m");
  CriticParams init{w_k, theta_init ? *theta_init : Vector(Vector::Zero(objective.m()))};
  return exact_critic(objective, WKind::kSimplex, radius, config, init, /*optimize_w=*/false);
}

Vector md_cost_update(const Vector& w_k, const Vector& expert_fev_hat, const Vector& current_fev,
                      double beta, WKind w_kind) {
  if (w_kind != WKind::kSimplex)
    throw ConfigError("md_cost_update: exponentiated update requires W = simplex");
  if (w_k.size() != expert_fev_hat.size() || w_k.size() != current_fev.size())
    throw ConfigError("md_cost_update: length mismatch");
  return numeric::tilt(w_k, -beta * (expert_fev_hat - current_fev));
}

double md_beta_preset(const std::string& env_name) {
  if (env_name == "SingleChain" || env_name == "DoubleChain") return 0.03;
  return 0.5;
}

RunResult md_run(const TabularMdp& mdp, const FeatureMap& features, const Vector& expert_fev,
                 const MdConfig& config, const std::optional<ReturnScale>& scale) {
  if (config.K < 0) throw ConfigError("md_run: K must be nonnegative");
  if (!(config.eta > 0.0) || !(config.alpha > 0.0) || config.beta < 0.0)
    throw ConfigError("md_run: eta, alpha must be positive and beta nonnegative");
  if (config.w_kind != WKind::kSimplex) throw ConfigError("md_run: W must be the simplex");
  if (features.n_pairs() != mdp.n_pairs()) throw ConfigError("md_run: features do not match mdp");
  if (expert_fev.size() != features.m()) throw ConfigError("md_run: expert FEV must have length m");
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  PpmConfig pc;
  pc.theta_radius = config.theta_radius;
  pc.beta_hat = config.beta_hat;
  pc.beta_floor = config.beta_floor;
  const double radius = resolve_theta_radius(pc, mdp.gamma());
  const int m = features.m();

  RunResult out;
  out.theta_radius = radius;
  Policy pi = Policy::uniform(mdp.n_states(), mdp.n_actions());
  out.policies.push_back(pi);
  Vector ref = fev(features, occupancy_measure(mdp, pi).mu());
  Vector w = Vector::Constant(m, 1.0 / m);
  std::optional<Vector> theta_prev;
  Vector mu_sum = Vector::Zero(mdp.n_pairs());
  out.average_w = Vector::Zero(m);
  out.average_theta = Vector::Zero(m);

  for (int k = 1; k <= config.K; ++k) {
    IterationLog row;
    row.k = k;
    const LogisticObjective obj(features, mdp.init_dist(), mdp.gamma(), PpmState{pi, ref, k}, expert_fev,
                                config.eta, config.alpha, /*with_expert_term=*/false);
    const CriticResult cr =
        md_policy_eval(obj, w, radius, config.exact, config.warm_start ? theta_prev : std::nullopt);
    row.g_value = cr.value;
    row.grad_norm = cr.grad_norm;
    row.bind_fraction = cr.bind_fraction;
    row.critic_converged = cr.converged;
    theta_prev = cr.params.theta;
    pi = actor_update(pi, logistic_q(features, cr.params.theta), config.alpha);
    const Vector mu = occupancy_measure(mdp, pi).mu();
    ref = fev(features, mu);
    mu_sum += mu;
    out.average_w += w;
    out.average_theta += cr.params.theta;
    out.critics.push_back(CriticParams{w, cr.params.theta});
    w = md_cost_update(w, expert_fev, ref, config.beta);
    row.d_c_hat = c_distance_fev(ref, expert_fev, WKind::kSimplex);
    row.true_return = -mu.dot(mdp.true_cost());
    row.normalized_return =
        scale ? scale->normalize(row.true_return) : std::numeric_limits<double>::quiet_NaN();
    row.wallclock_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    out.policies.push_back(pi);
    out.log.push_back(row);
  }
  if (config.K > 0) {
    out.average_w /= config.K;
    out.average_theta /= config.K;
    out.mixed_policy =
        policy_from_occupancy(OccupancyMeasure(mu_sum / config.K), mdp.n_states(), mdp.n_actions());
  } else {
    out.mixed_policy = pi;
  }
  return out;
}

}  // namespace ppil
