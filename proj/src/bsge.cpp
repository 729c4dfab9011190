#include "ppil/bsge.hpp"

#include "ppil/numeric.hpp"

#include <cmath>
#include <limits>

namespace ppil {

RidgeState::RidgeState(const TransitionBuffer& buffer, const FeatureMap& features, int n_states)
    : buffer_(buffer),
      features_(features),
      n_states_(n_states),
      pair_counts_(Vector::Zero(features.n_pairs())),
      next_counts_(Matrix::Zero(features.n_pairs(), n_states)) {
  if (features.n_pairs() % n_states != 0) throw ConfigError("ridge: features do not match states");
}

void RidgeState::set_n(int n) {
  if (n < 1) throw ConfigError("ridge: N must be at least 1");
  if (n > static_cast<int>(buffer_.size()))
    throw ConfigError("ridge: buffer has " + std::to_string(buffer_.size()) + " triples, " +
                      std::to_string(n) + " required");
  if (n < n_) {
    pair_counts_.setZero();
    next_counts_.setZero();
    n_ = 0;
  }
  const int n_actions = features_.n_pairs() / n_states_;
  for (int i = n_; i < n; ++i) {
    const Transition& tr = buffer_.triples[i];
    const int idx = tr.s * n_actions + tr.a;
    pair_counts_(idx) += 1.0;
    next_counts_(idx, tr.s_next) += 1.0;
  }
  n_ = n;
}

Matrix RidgeState::cov() const {
  const Matrix& phi = features_.phi();
  return phi.transpose() * (pair_counts_ / n_).asDiagonal() * phi;
}

Vector RidgeState::rho_hat() const { return features_.phi().transpose() * (pair_counts_ / n_); }

Matrix RidgeState::cross(const Matrix& targets) const {
  return features_.phi().transpose() * (next_counts_ * targets) / n_;
}

Matrix RidgeState::solve(const Matrix& rhs, double chi) const {
  if (chi < 0.0) throw ConfigError("ridge: chi must be nonnegative");
  const int m = features_.m();
  const Matrix a = cov() + chi * Matrix::Identity(m, m);
  Eigen::LDLT<Matrix> ldlt(a);
  const double dmin = ldlt.vectorD().minCoeff();
  if (ldlt.info() != Eigen::Success || !(dmin > 1e-14 * std::max(1.0, a.diagonal().maxCoeff())))
    throw ConfigError("ridge: singular covariance; use a positive chi");
  return ldlt.solve(rhs);
}

double RidgeState::default_chi(double c, double delta, double beta_floor) const {
  const double beta = std::max(numeric::min_eigenvalue(cov()), beta_floor);
  return c * std::log(features_.m() / delta) / (beta * n_);
}

namespace {

int infer_states(const FeatureMap& features, Eigen::Index n_states) {
  if (n_states <= 0 || features.n_pairs() % n_states != 0)
    throw ConfigError("ridge: state count does not divide the number of pairs");
  return static_cast<int>(n_states);
}

}  // namespace

Vector ridge_mv(const TransitionBuffer& buffer, const FeatureMap& features, const Vector& v,
                double chi, int n) {
  if (buffer.triples.empty()) throw ConfigError("ridge_mv: empty buffer");
  RidgeState rs(buffer, features, infer_states(features, v.size()));
  rs.set_n(n < 0 ? static_cast<int>(buffer.size()) : n);
  return rs.solve(rs.cross(v), chi);
}

Matrix ridge_gamma(const TransitionBuffer& buffer, const FeatureMap& features,
                   const Policy& policy_theta, double chi, int n) {
  if (buffer.triples.empty()) throw ConfigError("ridge_gamma: empty buffer");
  const int S = infer_states(features, policy_theta.n_states());
  const int A = policy_theta.n_actions();
  Matrix h = Matrix::Zero(S, features.m());
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) h.row(s) += policy_theta(s, a) * features.phi().row(s * A + a);
  RidgeState rs(buffer, features, S);
  rs.set_n(n < 0 ? static_cast<int>(buffer.size()) : n);
  return rs.solve(rs.cross(h), chi);
}

Vector b_hat(const Vector& delta_hat, const Vector& rho_hat, double eta) {
  if (delta_hat.size() != rho_hat.size()) throw ConfigError("b_hat: length mismatch");
  if (!(rho_hat.minCoeff() >= 0.0) || !(rho_hat.sum() > 0.0))
    throw ConfigError("b_hat: rho must be nonnegative with positive sum");
  const Vector x = -eta * delta_hat;
  const double log_z = numeric::weighted_logsumexp(rho_hat, x);
  return (x.array() - log_z).exp().matrix();
}

namespace {

Matrix expected_features(const FeatureMap& features, const Policy& pt) {
  const int S = pt.n_states(), A = pt.n_actions();
  Matrix h = Matrix::Zero(S, features.m());
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      if (pt(s, a) != 0.0) h.row(s) += pt(s, a) * features.phi().row(s * A + a);
  return h;
}

}  // namespace

PlugIns estimate_plugins(const SgdCriticProblem& problem, const CriticParams& x,
                         const RidgeState& ridge, double chi) {
  const Vector q = logistic_q(problem.features, x.theta);
  const Vector v = logistic_v(problem.policy_prev, q, problem.alpha);
  PlugIns p;
  p.policy_theta = actor_update(problem.policy_prev, q, problem.alpha);
  const Matrix h = expected_features(problem.features, p.policy_theta);
  const int m = problem.features.m();
  Matrix rhs(m, 1 + m);
  rhs.col(0) = ridge.cross(v);
  rhs.rightCols(m) = ridge.cross(h);
  const Matrix sol = ridge.solve(rhs, chi);
  p.mv = sol.col(0);
  p.gamma = sol.rightCols(m);
  p.rho = ridge.rho_hat();
  p.delta = x.w + problem.gamma * p.mv - x.theta;
  p.b = b_hat(p.delta, p.rho, problem.eta);
  return p;
}

PlugIns exact_plugins(const LogisticObjective& objective, const CriticParams& x) {
  const auto e = objective.evaluate(x.w, x.theta, false);
  PlugIns p;
  p.policy_theta = objective.policy_theta(x.theta);
  p.mv = objective.features().factor_m() * e.v;
  p.gamma = objective.gamma_matrix(x.theta);
  p.rho = objective.state().reference_fev;
  p.delta = e.delta;
  p.b = b_hat(p.delta, p.rho, objective.eta());
  return p;
}

GradientSample assemble_gradient(const SgdCriticProblem& problem, const PlugIns& plug, int i_prime,
                                 int s0, int a0) {
  const int m = problem.features.m();
  const int A = problem.policy_prev.n_actions();
  GradientSample g;
  const double bi = plug.b(i_prime);
  g.grad_w = -problem.expert_fev;
  g.grad_w(i_prime) += bi;
  g.grad_theta = bi * problem.gamma * plug.gamma.row(i_prime).transpose();
  g.grad_theta(i_prime) -= bi;
  g.grad_theta += (1.0 - problem.gamma) * problem.features.phi().row(s0 * A + a0).transpose();
  (void)m;
  return g;
}

GradientSample bsge(const SgdCriticProblem& problem, const CriticParams& x, const PlugIns& plug,
                    const TransitionBuffer& buffer, int fresh_index, Rng& rng, int draws) {
  (void)x;
  if (draws < 1) throw ConfigError("bsge: draws must be at least 1");
  if (fresh_index + draws > static_cast<int>(buffer.size()))
    throw ConfigError("bsge: buffer has " + std::to_string(buffer.size()) + " triples, " +
                      std::to_string(fresh_index + draws) + " required");
  const int A = problem.policy_prev.n_actions();
  GradientSample acc;
  for (int d = 0; d < draws; ++d) {
    const Transition& tr = buffer.triples[fresh_index + d];
    const int i_prime = rng.categorical(problem.features.phi().row(tr.s * A + tr.a));
    const int s0 = rng.categorical(problem.nu0);
    const int a0 = rng.categorical(plug.policy_theta.probs().row(s0));
    GradientSample g = assemble_gradient(problem, plug, i_prime, s0, a0);
    if (d == 0) {
      acc = std::move(g);
    } else {
      acc.grad_w += g.grad_w;
      acc.grad_theta += g.grad_theta;
    }
  }
  if (draws > 1) {
    acc.grad_w /= draws;
    acc.grad_theta /= draws;
  }
  return acc;
}

GradientSample bsge(const SgdCriticProblem& problem, const CriticParams& x, int n,
                    const TransitionBuffer& buffer, std::uint64_t seed, double chi) {
  if (n < 1) throw ConfigError("bsge: N must be at least 1");
  if (n + 1 > static_cast<int>(buffer.size()))
    throw ConfigError("bsge: buffer has " + std::to_string(buffer.size()) + " triples, " +
                      std::to_string(n + 1) + " required");
  RidgeState rs(buffer, problem.features, problem.policy_prev.n_states());
  rs.set_n(n);
  const SgdCriticConfig d;
  const double c = chi > 0.0 ? chi : rs.default_chi(d.chi_c, d.chi_delta, d.chi_beta_floor);
  const PlugIns plug = estimate_plugins(problem, x, rs, c);
  Rng rng(seed);
  return bsge(problem, x, plug, buffer, n, rng);
}

GradientSample bsge_conditional_mean(const SgdCriticProblem& problem, const PlugIns& plug,
                                     const Vector& lambda_fresh) {
  const Vector lb = lambda_fresh.cwiseProduct(plug.b);
  const Matrix h = expected_features(problem.features, plug.policy_theta);
  GradientSample g;
  g.grad_w = lb - problem.expert_fev;
  g.grad_theta = problem.gamma * (plug.gamma.transpose() * lb) - lb +
                 (1.0 - problem.gamma) * (h.transpose() * problem.nu0);
  return g;
}

int sgd_schedule_n(const SgdCriticConfig& config, int t) {
  long long n = static_cast<long long>(config.n0) * (1 + t);
  if (config.n_cap > 0) n = std::min<long long>(n, config.n_cap);
  return static_cast<int>(std::max<long long>(1, n));
}

int sgd_buffer_size(const SgdCriticConfig& config) {
  return sgd_schedule_n(config, config.T - 1) + config.T * config.minibatch;
}

SgdCriticResult sgd_critic(const SgdCriticProblem& problem, const TransitionBuffer& buffer,
                           const SgdCriticConfig& config, std::uint64_t seed,
                           const std::function<double(const CriticParams&)>& gap_oracle,
                           int diag_every) {
  if (config.T < 1 || config.n0 < 1 || config.minibatch < 1)
    throw ConfigError("sgd_critic: T, n0 and minibatch must be positive");
  if (!(config.tail_fraction > 0.0 && config.tail_fraction <= 1.0))
    throw ConfigError("sgd_critic: tail_fraction must lie in (0,1]");
  const int m = problem.features.m();
  const int n_max = sgd_schedule_n(config, config.T - 1);
  if (static_cast<int>(buffer.size()) < sgd_buffer_size(config))
    throw ConfigError("sgd_critic: buffer has " + std::to_string(buffer.size()) + " triples, " +
                      std::to_string(sgd_buffer_size(config)) + " required");
  const double beta0 = config.beta0 > 0.0 ? config.beta0 : 1.0 / (problem.eta + problem.alpha);
  Rng rng(seed);
  RidgeState ridge(buffer, problem.features, problem.policy_prev.n_states());
  CriticParams x{project_w(Vector::Zero(m), problem.w_kind), Vector::Zero(m)};
  CriticParams avg{Vector::Zero(m), Vector::Zero(m)};
  const int tail_start = config.T - std::max(1, static_cast<int>(std::lround(config.tail_fraction * config.T)));
  int averaged = 0;
  SgdCriticResult out;
  for (int t = 0; t < config.T; ++t) {
    const int n_t = sgd_schedule_n(config, t);
    ridge.set_n(n_t);
    const double chi = config.chi > 0.0 ? config.chi
                                        : ridge.default_chi(config.chi_c, config.chi_delta, config.chi_beta_floor);
    const PlugIns plug = estimate_plugins(problem, x, ridge, chi);
    const GradientSample g =
        bsge(problem, x, plug, buffer, n_max + t * config.minibatch, rng, config.minibatch);
    const double beta_t = beta0 / std::sqrt(t + 1.0);
    x.w += beta_t * g.grad_w;
    x.theta += beta_t * g.grad_theta;
    x.w = project_w(x.w, problem.w_kind);
    x.theta = numeric::project_box(x.theta, problem.radius);
    if (t >= tail_start) {
      avg.w += x.w;
      avg.theta += x.theta;
      ++averaged;
    }
    if (diag_every > 0 && ((t + 1) % diag_every == 0 || t + 1 == config.T)) {
      SgdDiagnostics d;
      d.t = t + 1;
      d.n_t = n_t;
      d.beta_t = beta_t;
      d.grad_norm_hat = std::sqrt(g.grad_w.squaredNorm() + g.grad_theta.squaredNorm());
      d.g_gap = std::numeric_limits<double>::quiet_NaN();
      if (gap_oracle && averaged > 0) d.g_gap = gap_oracle({avg.w / averaged, avg.theta / averaged});
      out.diagnostics.push_back(d);
    }
  }
  out.params = {avg.w / averaged, avg.theta / averaged};
  out.rho_hat = ridge.rho_hat();
  return out;
}

}  // namespace ppil
