#pragma once

#include "ppil/common.hpp"
#include "ppil/eval.hpp"
#include "ppil/expert_data.hpp"
#include "ppil/features.hpp"
#include "ppil/mdp.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace ppil {

struct CriticParams {
  Vector w;
  Vector theta;
};

/// Projection onto W (simplex or unit l2 ball).
Vector project_w(const Vector& w, WKind kind);

/// Q_θ = Φθ.
Vector logistic_q(const FeatureMap& features, const Vector& theta);

/// V(s) = −(1/α) log Σ_a π(a|s) exp(−α Q(s,a)).
Vector logistic_v(const Policy& policy_prev, const Vector& q, double alpha);

/// δ = w + γ M V − θ.
Vector reduced_bellman_error(const Vector& w, const Vector& theta, const Matrix& factor_m,
                             const Vector& v, double gamma);

/// π(a|s) ∝ π_prev(a|s) exp(−α Q(s,a)).
Policy actor_update(const Policy& policy_prev, const Vector& q, double alpha);

/// λ(i) ∝ λ_prev(i) exp(−η δ(i)).
Vector lambda_update(const Vector& reference_fev, const Vector& delta, double eta);

/// Previous iterate of the proximal point loop.
struct PpmState {
  Policy policy;        // π_{k−1}
  Vector reference_fev; // Φ⊤d_{k−1}
  int k = 1;
};

/// The k-step critic objective
///   G(w,θ) = −(1/η) log Σ_i λ_{k−1}(i) e^{−ηδ(i)} + (1−γ)⟨ν0, V_θ⟩ − ⟨ρ̂_E, w⟩
/// with its exact gradient. `with_expert_term = false` drops the last term
/// (the mirror-descent policy-evaluation objective).
class LogisticObjective {
 public:
  LogisticObjective(const FeatureMap& features, const Vector& nu0, double gamma, PpmState state,
                    Vector expert_fev, double eta, double alpha, bool with_expert_term = true);

  struct Evaluation {
    double value = 0.0;
    Vector grad_w;
    Vector grad_theta;
    Vector v;
    Vector delta;
    Vector lambda_star;  // λ_{k−1} ⊙ B, sums to 1
    double log_partition = 0.0;
  };

  Evaluation evaluate(const Vector& w, const Vector& theta, bool with_gradient = true) const;
  double value(const Vector& w, const Vector& theta) const;

  /// π_{k−1,θ}(a|s) ∝ π_{k−1}(a|s) e^{−αQ_θ(s,a)}.
  Policy policy_theta(const Vector& theta) const;
  /// H(s', j) = Σ_a' π_{k−1,θ}(a'|s') φ_j(s', a'), shape S x m.
  Matrix expected_features(const Vector& theta) const;
  /// Γ = M H, shape m x m.
  Matrix gamma_matrix(const Vector& theta) const;

  const FeatureMap& features() const { return features_; }
  const PpmState& state() const { return state_; }
  const Vector& expert_fev() const { return expert_fev_; }
  const Vector& nu0() const { return nu0_; }
  double gamma() const { return gamma_; }
  double eta() const { return eta_; }
  double alpha() const { return alpha_; }
  bool with_expert_term() const { return with_expert_term_; }
  int m() const { return features_.m(); }

 private:
  FeatureMap features_;
  Vector nu0_;
  double gamma_;
  PpmState state_;
  Vector expert_fev_;
  double eta_;
  double alpha_;
  bool with_expert_term_;
};

/// Shifts θ by a constant so that the log-partition term of G vanishes.
/// G is unchanged; the certificate of a recovered cost uses this gauge.
Vector canonical_theta(const LogisticObjective& objective, const Vector& w, const Vector& theta);

struct ExactCriticConfig {
  double tol = 1e-7;       // projected-gradient-mapping norm
  int max_iters = 20000;
  bool accelerate = true;  // Nesterov momentum with adaptive restart
};

struct CriticResult {
  CriticParams params;
  double value = 0.0;
  double grad_norm = 0.0;  // projected-gradient mapping at step 1/(η+α)
  int iterations = 0;
  bool converged = false;
  double bind_fraction = 0.0;  // share of θ coordinates on the Θ boundary
};

struct ObjectiveValue {
  double value = 0.0;
  Vector grad_w;
  Vector grad_theta;
};

/// Any concave objective over (w, θ); the gradient may be skipped.
using ObjectiveFn = std::function<ObjectiveValue(const Vector& w, const Vector& theta, bool with_gradient)>;

/// Projected gradient ascent over W x Θ with nominal step 1/lip0, halved
/// while the ascent condition fails. Stops when the gradient mapping at
/// step 1/lip0 falls below config.tol.
CriticResult maximize_projected(const ObjectiveFn& f, int m, WKind w_kind, double radius, double lip0,
                                const ExactCriticConfig& config,
                                const std::optional<CriticParams>& init = std::nullopt,
                                bool optimize_w = true);

/// maximize_projected on G_k with lip0 = η+α. If `optimize_w` is false,
/// w stays at its initial value.
CriticResult exact_critic(const LogisticObjective& objective, WKind w_kind, double radius,
                          const ExactCriticConfig& config,
                          const std::optional<CriticParams>& init = std::nullopt,
                          bool optimize_w = true);

/// Gradient mapping norm ‖(P(x + g/L) − x)·L‖ with L = η+α.
double gradient_mapping_norm(const LogisticObjective& objective, const CriticParams& x,
                             WKind w_kind, double radius, bool optimize_w = true);

enum class CriticKind { kExact, kBsge };

struct SgdCriticConfig {
  int T = 1000;
  int n0 = 10;                 // n(t) = n0·(1+t)
  int n_cap = 0;               // 0: no cap besides the buffer
  double beta0 = 0.0;          // 0: 1/(η+α)
  double chi = 0.0;            // 0: c·log(m/δ)/(β̂N)
  double chi_c = 0.3;
  double chi_delta = 0.1;
  double chi_beta_floor = 1e-3;
  int minibatch = 1;           // index draws averaged per step
  double tail_fraction = 1.0;  // average over the last fraction of iterates
  DrawMode draw_mode = DrawMode::kGeometric;
  int episodic_horizon = 0;
  bool reuse_buffer = false;   // unanalyzed: keep the first buffer for all k
};

struct PpmConfig {
  double eta = 10.0;
  double alpha = 1.0;
  int K = 50;
  CriticKind critic = CriticKind::kExact;
  ExactCriticConfig exact;
  SgdCriticConfig sgd;
  WKind w_kind = WKind::kSimplex;
  std::optional<double> theta_radius;  // default (1+|log β̂|)/(1−γ)
  double beta_hat = 0.0;               // feature excitation estimate, floored
  double beta_floor = 1e-3;
  bool warm_start = true;
  std::uint64_t seed = 0;
};

double resolve_theta_radius(const PpmConfig& config, double gamma);

struct IterationLog {
  int k = 0;
  double g_value = 0.0;
  double grad_norm = 0.0;
  double d_c_hat = 0.0;
  double true_return = 0.0;
  double normalized_return = 0.0;
  double wallclock_ms = 0.0;
  double bind_fraction = 0.0;
  bool critic_converged = true;
};

struct RunResult {
  std::vector<Policy> policies;        // π_0 .. π_K
  std::vector<CriticParams> critics;   // k = 1..K
  std::vector<IterationLog> log;       // k = 1..K
  Policy mixed_policy = Policy::uniform(1, 1);
  Vector average_w;                    // (1/K) Σ w_k
  Vector average_theta;                // (1/K) Σ θ_k
  double theta_radius = 0.0;
  const Policy& last_policy() const { return policies.back(); }
};

/// Stationary policy whose occupancy is the average of the iterates'
/// occupancies (the uniform mixture π̂_K).
Policy mixture_policy(const TabularMdp& mdp, const std::vector<Policy>& policies);

/// Proximal point imitation learning from uniform π_0.
RunResult p2il_run(const TabularMdp& mdp, const FeatureMap& features, const Vector& expert_fev,
                   const PpmConfig& config, const std::optional<ReturnScale>& scale = std::nullopt);

}  // namespace ppil
