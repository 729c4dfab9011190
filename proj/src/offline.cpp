#include "ppil/offline.hpp"

#include "ppil/numeric.hpp"

#include <cmath>

namespace ppil {

OfflineBatch offline_batch_from_buffer(const TransitionBuffer& buffer, const FeatureMap& features,
                                       int n_states) {
  if (buffer.triples.empty()) throw ConfigError("offline: empty dataset");
  if (n_states <= 0 || features.n_pairs() % n_states != 0)
    throw ConfigError("offline: state count does not match features");
  OfflineBatch b;
  b.triples = buffer.triples;
  b.n_states = n_states;
  b.n_actions = features.n_pairs() / n_states;
  const int n = b.size();
  b.weights = Vector::Constant(n, 1.0 / n);
  b.expert_fev_hat = Vector::Zero(features.m());
  for (const auto& tr : b.triples) b.expert_fev_hat += features.phi().row(tr.s * b.n_actions + tr.a).transpose();
  b.expert_fev_hat /= n;
  return b;
}

OfflineBatch offline_batch_from_dataset(const TrajectoryDataset& data, const FeatureMap& features) {
  if (data.trajectories.empty() || data.horizon < 1) throw ConfigError("offline: empty dataset");
  OfflineBatch b;
  b.n_states = data.n_states;
  b.n_actions = data.n_actions;
  std::vector<double> w;
  for (const auto& tr : data.trajectories) {
    double disc = 1.0;
    for (int t = 0; t < data.horizon; ++t) {
      b.triples.push_back({tr.states[t], tr.actions[t], tr.states[t + 1]});
      w.push_back(disc);
      disc *= data.gamma;
    }
  }
  b.weights = Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
  b.weights /= b.weights.sum();
  b.expert_fev_hat = empirical_fev(data, features);
  return b;
}

OfflineObjective::OfflineObjective(const FeatureMap& features, const OfflineBatch& batch,
                                   const Vector& nu0, double gamma, double eta, double alpha, Nu0Mode mode)
    : features_(features),
      batch_(batch),
      nu0_(nu0),
      gamma_(gamma),
      eta_(eta),
      alpha_(alpha),
      mode_(mode),
      uniform_(Policy::uniform(batch.n_states, batch.n_actions)) {
  if (batch_.triples.empty()) throw ConfigError("offline: empty dataset");
  if (!(eta > 0.0) || !(alpha > 0.0)) throw ConfigError("offline: eta and alpha must be positive");
  if (batch_.n_states * batch_.n_actions != features_.n_pairs())
    throw ConfigError("offline: batch shape does not match features");
  if (batch_.weights.size() != batch_.size()) throw ConfigError("offline: one weight per triple required");
  if (batch_.expert_fev_hat.size() != features_.m()) throw ConfigError("offline: expert FEV must have length m");
  if (mode_ == Nu0Mode::kKnownNu0 && nu0_.size() != batch_.n_states)
    throw ConfigError("offline: nu0 must have length S in known-nu0 mode");
}

Vector OfflineObjective::v(const Vector& theta) const {
  return logistic_v(uniform_, logistic_q(features_, theta), alpha_);
}

OfflineObjective::Evaluation OfflineObjective::evaluate(const Vector& w, const Vector& theta,
                                                        bool with_gradient) const {
  const int m = features_.m();
  if (w.size() != m || theta.size() != m) throw ConfigError("offline: w and theta must have length m");
  const int A = batch_.n_actions, S = batch_.n_states;
  const Matrix& phi = features_.phi();
  const Vector q = phi * theta;
  const Vector v = logistic_v(uniform_, q, alpha_);
  const Vector u = phi * (w - theta);
  const int n = batch_.size();
  Evaluation e;
  e.delta_hat.resize(n);
  for (int i = 0; i < n; ++i) {
    const Transition& tr = batch_.triples[i];
    e.delta_hat(i) = u(tr.s * A + tr.a) + gamma_ * v(tr.s_next);
  }
  const Vector x = -eta_ * e.delta_hat;
  const double log_z = numeric::weighted_logsumexp(batch_.weights, x);
  e.z_star = (batch_.weights.array() * (x.array() - log_z).exp()).matrix();

  Vector start_mass = Vector::Zero(S), next_mass = Vector::Zero(S);
  if (mode_ == Nu0Mode::kExpertFlow) {
    for (int i = 0; i < n; ++i) {
      start_mass(batch_.triples[i].s) += batch_.weights(i);
      next_mass(batch_.triples[i].s_next) += batch_.weights(i);
    }
    e.nu0_term = start_mass.dot(v) - gamma_ * next_mass.dot(v);
  } else {
    e.nu0_term = (1.0 - gamma_) * nu0_.dot(v);
  }
  e.value = -batch_.expert_fev_hat.dot(w) - log_z / eta_ + e.nu0_term;
  if (!with_gradient) return e;

  const Policy pt = actor_update(uniform_, q, alpha_);
  Matrix h = Matrix::Zero(S, m);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) h.row(s) += pt(s, a) * phi.row(s * A + a);
  Vector z_pairs = Vector::Zero(features_.n_pairs()), z_next = Vector::Zero(S);
  for (int i = 0; i < n; ++i) {
    const Transition& tr = batch_.triples[i];
    z_pairs(tr.s * A + tr.a) += e.z_star(i);
    z_next(tr.s_next) += e.z_star(i);
  }
  const Vector zphi = phi.transpose() * z_pairs;
  e.grad_w = zphi - batch_.expert_fev_hat;
  const Vector state_weights = mode_ == Nu0Mode::kExpertFlow
                                   ? Vector(start_mass - gamma_ * next_mass)
                                   : Vector((1.0 - gamma_) * nu0_);
  e.grad_theta = gamma_ * (h.transpose() * z_next) - zphi + h.transpose() * state_weights;
  return e;
}

double OfflineObjective::dv_saddle(const Vector& w, const Vector& theta, const Vector& z) const {
  if (z.size() != batch_.size()) throw ConfigError("dv_saddle: one weight per triple required");
  if (z.minCoeff() < 0.0) throw ConfigError("dv_saddle: z must be nonnegative");
  const Evaluation e = evaluate(w, theta, false);
  double s = -batch_.expert_fev_hat.dot(w) + e.nu0_term;
  for (int i = 0; i < batch_.size(); ++i) {
    if (z(i) == 0.0) continue;
    s += z(i) * (e.delta_hat(i) + std::log(z(i) / batch_.weights(i)) / eta_);
  }
  return s;
}

double offline_objective(const Vector& w, const Vector& theta, const FeatureMap& features,
                         const OfflineBatch& batch, const Vector& nu0, double gamma, Nu0Mode mode,
                         double eta, double alpha) {
  return OfflineObjective(features, batch, nu0, gamma, eta, alpha, mode).value(w, theta);
}

Vector dv_minimizer(const Vector& delta_hat, const Vector& weights, double eta) {
  return numeric::tilt(weights, -eta * delta_hat);
}

namespace {

double plugin_alpha(const OfflineBatch& batch, double gamma, double eps) {
  // H(d*‖d_0) with d* replaced by the batch's empirical expert occupancy.
  const int A = batch.n_actions;
  Vector mu = Vector::Zero(batch.n_states * A);
  for (int i = 0; i < batch.size(); ++i)
    mu(batch.triples[i].s * A + batch.triples[i].a) += batch.weights(i);
  double h = 0.0;
  for (int s = 0; s < batch.n_states; ++s) {
    const double tot = mu.segment(s * A, A).sum();
    for (int a = 0; a < A; ++a)
      if (mu(s * A + a) > 0.0) h += mu(s * A + a) * std::log(mu(s * A + a) / tot * A);
  }
  const double w_max = 1.0;
  return std::pow(2.0 * h / (3.0 * w_max) * std::sqrt((1.0 - gamma) / (2.0 * eps)), 2.0 / 3.0);
}

}  // namespace

OfflineResult op2il_run(const FeatureMap& features, const Vector& nu0, double gamma,
                        const OfflineBatch& batch, const OfflineConfig& config) {
  if (batch.triples.empty()) throw ConfigError("offline: empty dataset");
  const OfflineObjective obj(features, batch, nu0, gamma, config.eta, config.alpha, config.nu0_mode);
  double radius = 0.0;
  if (config.theta_radius) {
    radius = *config.theta_radius;
  } else {
    Vector mu = Vector::Zero(features.n_pairs());
    for (int i = 0; i < batch.size(); ++i)
      mu(batch.triples[i].s * batch.n_actions + batch.triples[i].a) += batch.weights(i);
    radius = theta_radius(min_feature_excitation(features, mu), gamma, config.beta_floor);
  }
  const double lip0 = config.eta + config.alpha;
  OfflineResult out;
  out.theta_radius = radius;
  const ObjectiveFn f = [&obj](const Vector& w, const Vector& theta, bool grad) {
    auto e = obj.evaluate(w, theta, grad);
    return ObjectiveValue{e.value, std::move(e.grad_w), std::move(e.grad_theta)};
  };
  if (!config.dv_alternating) {
    const CriticResult cr = maximize_projected(f, features.m(), config.w_kind, radius, lip0, config.critic);
    out.params = cr.params;
    out.value = cr.value;
    out.grad_norm = cr.grad_norm;
    out.iterations = cr.iterations;
    out.converged = cr.converged;
  } else {
    // Alternate an entropic step on z toward its minimizer with a projected
    // ascent step on (w, θ) for the saddle function at that z.
    const int m = features.m();
    CriticParams x{project_w(Vector::Zero(m), config.w_kind), Vector::Zero(m)};
    Vector z = batch.weights;
    const double tau = config.dv_z_step;
    int it = 0;
    double gm = 0.0;
    for (; it < config.critic.max_iters; ++it) {
      const auto e = obj.evaluate(x.w, x.theta, true);
      const Vector logz = (1.0 - tau) * z.array().max(1e-300).log().matrix() +
                          tau * e.z_star.array().max(1e-300).log().matrix();
      z = (logz.array() - numeric::logsumexp(logz)).exp().matrix();
      // ∇ of S at fixed z: replace z* by z in the gradient expression.
      const int A = batch.n_actions;
      Vector z_pairs = Vector::Zero(features.n_pairs()), z_next = Vector::Zero(batch.n_states);
      Vector zs_pairs = Vector::Zero(features.n_pairs()), zs_next = Vector::Zero(batch.n_states);
      for (int i = 0; i < batch.size(); ++i) {
        const Transition& tr = batch.triples[i];
        z_pairs(tr.s * A + tr.a) += z(i);
        z_next(tr.s_next) += z(i);
        zs_pairs(tr.s * A + tr.a) += e.z_star(i);
        zs_next(tr.s_next) += e.z_star(i);
      }
      const Matrix& phi = features.phi();
      const Policy pt = actor_update(Policy::uniform(batch.n_states, A), phi * x.theta, config.alpha);
      Matrix h = Matrix::Zero(batch.n_states, m);
      for (int s = 0; s < batch.n_states; ++s)
        for (int a = 0; a < A; ++a) h.row(s) += pt(s, a) * phi.row(s * A + a);
      const Vector dphi = phi.transpose() * (z_pairs - zs_pairs);
      const Vector gw = e.grad_w + dphi;
      const Vector g_theta = e.grad_theta + gamma * (h.transpose() * (z_next - zs_next)) - dphi;
      x.w = project_w(x.w + gw / lip0, config.w_kind);
      x.theta = numeric::project_box(x.theta + g_theta / lip0, radius);
      if (it % 10 == 0) {
        const auto e2 = obj.evaluate(x.w, x.theta, true);
        const Vector pw = project_w(x.w + e2.grad_w / lip0, config.w_kind);
        const Vector pth = numeric::project_box(x.theta + e2.grad_theta / lip0, radius);
        gm = lip0 * std::sqrt((pw - x.w).squaredNorm() + (pth - x.theta).squaredNorm());
        if (gm <= config.critic.tol) break;
      }
    }
    out.params = x;
    out.value = obj.value(x.w, x.theta);
    out.grad_norm = gm;
    out.iterations = it;
    out.converged = gm <= config.critic.tol;
  }
  out.policy = actor_update(Policy::uniform(batch.n_states, batch.n_actions),
                            logistic_q(features, out.params.theta), config.alpha);
  out.alpha_theory = plugin_alpha(batch, gamma, std::max(config.critic.tol, 1e-12));
  return out;
}

BiasReport feature_vs_sa_bias(const Vector& w, const Vector& theta, const Vector& expert_mu,
                              const FeatureMap& features, const Vector& nu0, double gamma, double eta,
                              double alpha, double beta_hat) {
  const int S = static_cast<int>(nu0.size());
  const int A = features.n_pairs() / S;
  const Vector lam = fev(features, expert_mu);
  const Policy uni = Policy::uniform(S, A);
  const Vector v = logistic_v(uni, logistic_q(features, theta), alpha);
  const Vector delta = reduced_bellman_error(w, theta, features.factor_m(), v, gamma);
  const double common = (1.0 - gamma) * nu0.dot(v) - lam.dot(w);
  BiasReport r;
  r.g_feature = -numeric::weighted_logsumexp(lam, -eta * delta, 0.0) / eta + common;
  const Vector delta_sa = features.phi() * delta;
  r.g_sa = -numeric::weighted_logsumexp(expert_mu, -eta * delta_sa, 0.0) / eta + common;
  r.gap = std::abs(r.g_feature - r.g_sa);
  r.b = 1.0 + 2.0 * (1.0 + std::abs(std::log(beta_hat))) / (1.0 - gamma);
  r.bound = std::exp(1.0) * eta * r.b * r.b;
  r.bound_applies = eta * r.b <= 1.0;
  return r;
}

}  // namespace ppil
