#pragma once

#include "ppil/common.hpp"
#include "ppil/expert_data.hpp"
#include "ppil/features.hpp"
#include "ppil/ppm.hpp"
#include "ppil/rng.hpp"

#include <functional>
#include <vector>

namespace ppil {

/// Everything the model-free critic may use: features, ν0 for resets, the
/// previous policy and the expert FEV estimate. No transition model.
struct SgdCriticProblem {
  const FeatureMap& features;
  const Vector& nu0;
  double gamma;
  const Policy& policy_prev;
  const Vector& expert_fev;
  double eta;
  double alpha;
  WKind w_kind;
  double radius;
};

/// Sufficient statistics of the first N buffer triples: pair counts and
/// (s,a) -> s' transition counts. Growing N is incremental.
class RidgeState {
 public:
  RidgeState(const TransitionBuffer& buffer, const FeatureMap& features, int n_states);

  void set_n(int n);
  int n() const { return n_; }
  /// Λ_N = (1/N) Σ φφ⊤.
  Matrix cov() const;
  /// ρ̂ = (1/N) Σ φ(s_n, a_n).
  Vector rho_hat() const;
  /// (1/N) Σ φ(s_n,a_n) f(s'_n)⊤ for a matrix of targets with one row per state.
  Matrix cross(const Matrix& targets) const;
  /// Solves (Λ_N + χI) X = rhs.
  Matrix solve(const Matrix& rhs, double chi) const;
  /// Default χ = c·log(m/δ)/(β̂N) with β̂ = max(λ_min(Λ_N), floor).
  double default_chi(double c, double delta, double beta_floor) const;

 private:
  const TransitionBuffer& buffer_;
  const FeatureMap& features_;
  int n_states_;
  int n_ = 0;
  Vector pair_counts_;
  Matrix next_counts_;  // (S·A) x S
};

/// (1/N)(Λ_N + χI)^{-1} Σ φ(s_n,a_n) V(s'_n) over the first N triples.
Vector ridge_mv(const TransitionBuffer& buffer, const FeatureMap& features, const Vector& v,
                double chi, int n = -1);

/// Column j regresses h_j(s') = Σ_a' π(a'|s') φ_j(s',a').
Matrix ridge_gamma(const TransitionBuffer& buffer, const FeatureMap& features,
                   const Policy& policy_theta, double chi, int n = -1);

/// B̂(i) = e^{−ηδ̂(i)} / Σ_i ρ̂(i) e^{−ηδ̂(i)}.
Vector b_hat(const Vector& delta_hat, const Vector& rho_hat, double eta);

/// Plug-in quantities shared by all draws at one (w, θ).
struct PlugIns {
  Vector mv;       // M̂V
  Matrix gamma;    // Γ̂
  Vector rho;      // ρ̂_{k−1}
  Vector delta;    // δ̂
  Vector b;        // B̂
  Policy policy_theta = Policy::uniform(1, 1);
};

PlugIns estimate_plugins(const SgdCriticProblem& problem, const CriticParams& x,
                         const RidgeState& ridge, double chi);

/// The same quantities computed from the model (M and the true λ_{k−1}).
PlugIns exact_plugins(const LogisticObjective& objective, const CriticParams& x);

struct GradientSample {
  Vector grad_w;
  Vector grad_theta;
};

/// One estimator output given the drawn feature index i' and reset pair (s0, a0).
GradientSample assemble_gradient(const SgdCriticProblem& problem, const PlugIns& plug, int i_prime,
                                 int s0, int a0);

/// Full estimator with the fresh pair taken from buffer[fresh_index] (≥ N) and
/// `draws` independent index draws averaged (1 = the analyzed estimator).
GradientSample bsge(const SgdCriticProblem& problem, const CriticParams& x, const PlugIns& plug,
                    const TransitionBuffer& buffer, int fresh_index, Rng& rng, int draws = 1);

/// Convenience form: plug-ins from the first N triples, fresh entry N.
GradientSample bsge(const SgdCriticProblem& problem, const CriticParams& x, int n,
                    const TransitionBuffer& buffer, std::uint64_t seed, double chi = 0.0);

/// Expectation of the estimator over the index draws, for fresh pairs drawn
/// from an occupancy with FEV `lambda_fresh`.
GradientSample bsge_conditional_mean(const SgdCriticProblem& problem, const PlugIns& plug,
                                     const Vector& lambda_fresh);

struct SgdDiagnostics {
  int t = 0;
  int n_t = 0;
  double beta_t = 0.0;
  double g_gap = 0.0;  // NaN without an oracle
  double grad_norm_hat = 0.0;
};

struct SgdCriticResult {
  CriticParams params;
  std::vector<SgdDiagnostics> diagnostics;
  Vector rho_hat;
};

int sgd_schedule_n(const SgdCriticConfig& config, int t);
/// Triples needed: n(T−1) for plug-ins plus T·minibatch fresh entries.
int sgd_buffer_size(const SgdCriticConfig& config);

/// Projected stochastic gradient ascent; returns the average of the iterates
/// in the tail window. `gap_oracle`, if set, maps averaged params to G* − G.
SgdCriticResult sgd_critic(const SgdCriticProblem& problem, const TransitionBuffer& buffer,
                           const SgdCriticConfig& config, std::uint64_t seed,
                           const std::function<double(const CriticParams&)>& gap_oracle = {},
                           int diag_every = 0);

}  // namespace ppil
