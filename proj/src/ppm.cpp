#include "ppil/ppm.hpp"

#include "ppil/bsge.hpp"
#include "ppil/numeric.hpp"
#include "ppil/rng.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace ppil {

Vector project_w(const Vector& w, WKind kind) {
  return kind == WKind::kSimplex ? numeric::project_simplex(w) : numeric::project_l2_ball(w, 1.0);
}

Vector logistic_q(const FeatureMap& features, const Vector& theta) {
  if (theta.size() != features.m()) throw ConfigError("logistic_q: theta length must equal m");
  return features.phi() * theta;
}

Vector logistic_v(const Policy& policy_prev, const Vector& q, double alpha) {
  const int S = policy_prev.n_states(), A = policy_prev.n_actions();
  if (q.size() != static_cast<Eigen::Index>(S) * A) throw ConfigError("logistic_v: q length must be S*A");
  Vector v(S);
  for (int s = 0; s < S; ++s) {
    double qmin = std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a)
      if (policy_prev(s, a) > 0.0) qmin = std::min(qmin, q(s * A + a));
    if (alpha == 0.0) {
      double mean = 0.0;
      for (int a = 0; a < A; ++a) mean += policy_prev(s, a) * q(s * A + a);
      v(s) = mean;
      continue;
    }
    double acc = 0.0;
    for (int a = 0; a < A; ++a) {
      const double p = policy_prev(s, a);
      if (p > 0.0) acc += p * std::exp(-alpha * (q(s * A + a) - qmin));
    }
    v(s) = qmin - std::log(acc) / alpha;
  }
  return v;
}

Vector reduced_bellman_error(const Vector& w, const Vector& theta, const Matrix& factor_m,
                             const Vector& v, double gamma) {
  if (w.size() != theta.size() || factor_m.rows() != w.size() || factor_m.cols() != v.size())
    throw ConfigError("reduced_bellman_error: shape mismatch");
  return w + gamma * (factor_m * v) - theta;
}

Policy actor_update(const Policy& policy_prev, const Vector& q, double alpha) {
  const int S = policy_prev.n_states(), A = policy_prev.n_actions();
  if (q.size() != static_cast<Eigen::Index>(S) * A) throw ConfigError("actor_update: q length must be S*A");
  Matrix p(S, A);
  for (int s = 0; s < S; ++s) {
    const Vector qs = q.segment(s * A, A);
    p.row(s) = numeric::tilt(policy_prev.probs().row(s).transpose(), -alpha * qs).transpose();
  }
  return Policy(std::move(p));
}

Vector lambda_update(const Vector& reference_fev, const Vector& delta, double eta) {
  if (reference_fev.size() != delta.size()) throw ConfigError("lambda_update: length mismatch");
  return numeric::tilt(reference_fev, -eta * delta);
}

LogisticObjective::LogisticObjective(const FeatureMap& features, const Vector& nu0, double gamma,
                                     PpmState state, Vector expert_fev, double eta, double alpha,
                                     bool with_expert_term)
    : features_(features),
      nu0_(nu0),
      gamma_(gamma),
      state_(std::move(state)),
      expert_fev_(std::move(expert_fev)),
      eta_(eta),
      alpha_(alpha),
      with_expert_term_(with_expert_term) {
  if (!(eta > 0.0) || !(alpha > 0.0)) throw ConfigError("objective: eta and alpha must be positive");
  const Matrix& m = features_.factor_m();
  if (m.cols() != nu0_.size()) throw ConfigError("objective: factor_m must have S columns");
  if (state_.reference_fev.size() != features_.m() || expert_fev_.size() != features_.m())
    throw ConfigError("objective: FEV vectors must have length m");
  if (static_cast<Eigen::Index>(state_.policy.n_states()) * state_.policy.n_actions() !=
      features_.n_pairs())
    throw ConfigError("objective: policy shape does not match features");
}

Policy LogisticObjective::policy_theta(const Vector& theta) const {
  return actor_update(state_.policy, logistic_q(features_, theta), alpha_);
}

Matrix LogisticObjective::expected_features(const Vector& theta) const {
  const Policy pt = policy_theta(theta);
  const int S = pt.n_states(), A = pt.n_actions();
  const Matrix& phi = features_.phi();
  Matrix h = Matrix::Zero(S, features_.m());
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      if (pt(s, a) != 0.0) h.row(s) += pt(s, a) * phi.row(s * A + a);
  return h;
}

Matrix LogisticObjective::gamma_matrix(const Vector& theta) const {
  return features_.factor_m() * expected_features(theta);
}

LogisticObjective::Evaluation LogisticObjective::evaluate(const Vector& w, const Vector& theta,
                                                          bool with_gradient) const {
  const int m = features_.m();
  if (w.size() != m || theta.size() != m) throw ConfigError("objective: w and theta must have length m");
  Evaluation e;
  const Vector q = logistic_q(features_, theta);
  e.v = logistic_v(state_.policy, q, alpha_);
  e.delta = reduced_bellman_error(w, theta, features_.factor_m(), e.v, gamma_);

  // Coordinates with λ_{k−1}(i) = 0 carry no mass and are left out.
  const Vector& lam = state_.reference_fev;
  double zmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i)
    if (lam(i) > 0.0) zmax = std::max(zmax, std::log(lam(i)) - eta_ * e.delta(i));
  double acc = 0.0;
  e.lambda_star = Vector::Zero(m);
  for (int i = 0; i < m; ++i)
    if (lam(i) > 0.0) {
      e.lambda_star(i) = std::exp(std::log(lam(i)) - eta_ * e.delta(i) - zmax);
      acc += e.lambda_star(i);
    }
  e.log_partition = zmax + std::log(acc);
  e.lambda_star /= acc;

  e.value = -e.log_partition / eta_ + (1.0 - gamma_) * nu0_.dot(e.v);
  if (with_expert_term_) e.value -= expert_fev_.dot(w);
  if (!with_gradient) return e;

  e.grad_w = with_expert_term_ ? Vector(e.lambda_star - expert_fev_) : e.lambda_star;
  const Matrix h = expected_features(theta);
  const Vector u = gamma_ * (features_.factor_m().transpose() * e.lambda_star) + (1.0 - gamma_) * nu0_;
  e.grad_theta = h.transpose() * u - e.lambda_star;
  return e;
}

double LogisticObjective::value(const Vector& w, const Vector& theta) const {
  return evaluate(w, theta, false).value;
}

Vector canonical_theta(const LogisticObjective& objective, const Vector& w, const Vector& theta) {
  const double log_z = objective.evaluate(w, theta, false).log_partition;
  const double c = -log_z / (objective.eta() * (1.0 - objective.gamma()));
  return (theta.array() + c).matrix();
}

namespace {

struct Point {
  Vector w;
  Vector theta;
};

Point project_point(const Point& p, WKind kind, double radius, bool optimize_w) {
  return {optimize_w ? project_w(p.w, kind) : p.w, numeric::project_box(p.theta, radius)};
}

double mapping_norm(const Point& x, const Vector& gw, const Vector& gt, WKind kind, double radius,
                    bool optimize_w, double lip) {
  const Point moved{x.w + gw / lip, x.theta + gt / lip};
  const Point p = project_point(moved, kind, radius, optimize_w);
  const double dw = optimize_w ? (p.w - x.w).squaredNorm() : 0.0;
  return lip * std::sqrt(dw + (p.theta - x.theta).squaredNorm());
}

}  // namespace

double gradient_mapping_norm(const LogisticObjective& objective, const CriticParams& x, WKind w_kind,
                             double radius, bool optimize_w) {
  const auto e = objective.evaluate(x.w, x.theta);
  return mapping_norm({x.w, x.theta}, e.grad_w, e.grad_theta, w_kind, radius, optimize_w,
                      objective.eta() + objective.alpha());
}

CriticResult maximize_projected(const ObjectiveFn& f, int m, WKind w_kind, double radius, double lip0,
                                const ExactCriticConfig& config, const std::optional<CriticParams>& init,
                                bool optimize_w) {
  Point x0 = init ? Point{init->w, init->theta} : Point{Vector::Zero(m), Vector::Zero(m)};
  Point x = project_point(x0, w_kind, radius, optimize_w);
  ObjectiveValue ex = f(x.w, x.theta, true);
  Point y = x;
  ObjectiveValue ey = ex;
  double t = 1.0;
  double lip = lip0;
  double gm = mapping_norm(x, ex.grad_w, ex.grad_theta, w_kind, radius, optimize_w, lip0);
  int it = 0;
  while (gm > config.tol && it < config.max_iters) {
    ++it;
    Point xn;
    double fn = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      xn = project_point({optimize_w ? Vector(y.w + ey.grad_w / lip) : y.w, y.theta + ey.grad_theta / lip},
                         w_kind, radius, optimize_w);
      const Vector dw = xn.w - y.w, dt = xn.theta - y.theta;
      fn = f(xn.w, xn.theta, false).value;
      const double model = ey.value + ey.grad_w.dot(dw) + ey.grad_theta.dot(dt) -
                           0.5 * lip * (dw.squaredNorm() + dt.squaredNorm());
      if (fn >= model - 1e-13 * (1.0 + std::abs(ey.value))) break;
      lip *= 2.0;
    }
    if (fn < ex.value && config.accelerate && t > 1.0) {
      // Momentum overshot: restart from the current iterate.
      y = x;
      ey = ex;
      t = 1.0;
      continue;
    }
    ObjectiveValue en = f(xn.w, xn.theta, true);
    if (en.value < ex.value) {
      // Values tied up to round-off: fall back to the gradient mapping to
      // decide, and drop momentum.
      const double gn = mapping_norm(xn, en.grad_w, en.grad_theta, w_kind, radius, optimize_w, lip0);
      if (en.value < ex.value - 1e-14 * (1.0 + std::abs(ex.value)) || !(gn < gm)) break;
      x = std::move(xn);
      ex = std::move(en);
      y = x;
      ey = ex;
      t = 1.0;
      gm = gn;
      continue;
    }
    if (config.accelerate) {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / tn;
      y = project_point({xn.w + beta * (xn.w - x.w), xn.theta + beta * (xn.theta - x.theta)}, w_kind,
                        radius, optimize_w);
      t = tn;
      x = std::move(xn);
      ex = std::move(en);
      ey = beta > 0.0 ? f(y.w, y.theta, true) : ex;
    } else {
      x = std::move(xn);
      ex = std::move(en);
      y = x;
      ey = ex;
    }
    gm = mapping_norm(x, ex.grad_w, ex.grad_theta, w_kind, radius, optimize_w, lip0);
  }
  CriticResult r;
  r.params = {x.w, x.theta};
  r.value = ex.value;
  r.grad_norm = gm;
  r.iterations = it;
  r.converged = gm <= config.tol;
  int bound = 0;
  for (int j = 0; j < m; ++j)
    if (std::abs(x.theta(j)) >= radius * (1.0 - 1e-9)) ++bound;
  r.bind_fraction = static_cast<double>(bound) / m;
  return r;
}

CriticResult exact_critic(const LogisticObjective& objective, WKind w_kind, double radius,
                          const ExactCriticConfig& config, const std::optional<CriticParams>& init,
                          bool optimize_w) {
  const ObjectiveFn f = [&objective](const Vector& w, const Vector& theta, bool grad) {
    auto e = objective.evaluate(w, theta, grad);
    return ObjectiveValue{e.value, std::move(e.grad_w), std::move(e.grad_theta)};
  };
  return maximize_projected(f, objective.m(), w_kind, radius, objective.eta() + objective.alpha(),
                            config, init, optimize_w);
}

double resolve_theta_radius(const PpmConfig& config, double gamma) {
  if (config.theta_radius) {
    if (!(*config.theta_radius > 0.0)) throw ConfigError("theta radius must be positive");
    return *config.theta_radius;
  }
  return theta_radius(config.beta_hat, gamma, config.beta_floor);
}

Policy mixture_policy(const TabularMdp& mdp, const std::vector<Policy>& policies) {
  if (policies.empty()) throw ConfigError("mixture_policy: no policies");
  Vector mu = Vector::Zero(mdp.n_pairs());
  for (const auto& p : policies) mu += occupancy_measure(mdp, p).mu();
  mu /= static_cast<double>(policies.size());
  return policy_from_occupancy(OccupancyMeasure(mu), mdp.n_states(), mdp.n_actions());
}

RunResult p2il_run(const TabularMdp& mdp, const FeatureMap& features, const Vector& expert_fev,
                   const PpmConfig& config, const std::optional<ReturnScale>& scale) {
  if (config.K < 0) throw ConfigError("p2il_run: K must be nonnegative");
  if (!(config.eta > 0.0) || !(config.alpha > 0.0))
    throw ConfigError("p2il_run: eta and alpha must be positive");
  if (features.n_pairs() != mdp.n_pairs()) throw ConfigError("p2il_run: features do not match mdp");
  if (expert_fev.size() != features.m()) throw ConfigError("p2il_run: expert FEV must have length m");
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const double radius = resolve_theta_radius(config, mdp.gamma());
  RunResult out;
  out.theta_radius = radius;
  Policy pi = Policy::uniform(mdp.n_states(), mdp.n_actions());
  out.policies.push_back(pi);
  Vector mu = occupancy_measure(mdp, pi).mu();
  Vector ref = fev(features, mu);
  std::optional<CriticParams> warm;
  std::optional<TransitionBuffer> kept_buffer;
  Vector mu_sum = Vector::Zero(mdp.n_pairs());
  out.average_w = Vector::Zero(features.m());
  out.average_theta = Vector::Zero(features.m());

  for (int k = 1; k <= config.K; ++k) {
    IterationLog row;
    row.k = k;
    CriticParams params;
    if (config.critic == CriticKind::kExact) {
      const LogisticObjective obj(features, mdp.init_dist(), mdp.gamma(), PpmState{pi, ref, k},
                                  expert_fev, config.eta, config.alpha);
      const CriticResult cr =
          exact_critic(obj, config.w_kind, radius, config.exact, config.warm_start ? warm : std::nullopt);
      params = cr.params;
      row.g_value = cr.value;
      row.grad_norm = cr.grad_norm;
      row.bind_fraction = cr.bind_fraction;
      row.critic_converged = cr.converged;
    } else {
      const SgdCriticConfig& sc = config.sgd;
      const int n_needed = sgd_buffer_size(sc);
      const std::uint64_t bseed = derive_seed(config.seed, 2 * static_cast<std::uint64_t>(k));
      if (!sc.reuse_buffer || !kept_buffer)
        kept_buffer = sample_occupancy_buffer(mdp, pi, n_needed, sc.draw_mode, bseed, sc.episodic_horizon);
      const SgdCriticProblem prob{features, mdp.init_dist(), mdp.gamma(), pi, expert_fev,
                                  config.eta, config.alpha, config.w_kind, radius};
      const SgdCriticResult sr =
          sgd_critic(prob, *kept_buffer, sc, derive_seed(config.seed, 2 * static_cast<std::uint64_t>(k) + 1));
      params = sr.params;
      if (features.has_factor()) {
        const LogisticObjective obj(features, mdp.init_dist(), mdp.gamma(), PpmState{pi, ref, k},
                                    expert_fev, config.eta, config.alpha);
        row.g_value = obj.value(params.w, params.theta);
        row.grad_norm = gradient_mapping_norm(obj, params, config.w_kind, radius);
      } else {
        row.g_value = std::numeric_limits<double>::quiet_NaN();
        row.grad_norm = std::numeric_limits<double>::quiet_NaN();
      }
      int bound = 0;
      for (int j = 0; j < features.m(); ++j)
        if (std::abs(params.theta(j)) >= radius * (1.0 - 1e-9)) ++bound;
      row.bind_fraction = static_cast<double>(bound) / features.m();
    }
    warm = params;
    pi = actor_update(pi, logistic_q(features, params.theta), config.alpha);
    mu = occupancy_measure(mdp, pi).mu();
    ref = fev(features, mu);
    mu_sum += mu;
    out.average_w += params.w;
    out.average_theta += params.theta;
    row.d_c_hat = c_distance_fev(ref, expert_fev, config.w_kind);
    row.true_return = -mu.dot(mdp.true_cost());
    row.normalized_return = scale ? scale->normalize(row.true_return)
                                  : std::numeric_limits<double>::quiet_NaN();
    row.wallclock_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    out.policies.push_back(pi);
    out.critics.push_back(std::move(params));
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
