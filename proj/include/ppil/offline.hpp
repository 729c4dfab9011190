#pragma once

#include "ppil/common.hpp"
#include "ppil/expert_data.hpp"
#include "ppil/features.hpp"
#include "ppil/ppm.hpp"

#include <vector>

namespace ppil {

/// Expert transitions (s, a, s') with (s, a) from the expert occupancy.
/// `weights` sum to 1; uniform for i.i.d. draws.
struct OfflineBatch {
  std::vector<Transition> triples;
  Vector weights;
  Vector expert_fev_hat;
  int n_states = 0;
  int n_actions = 0;
  int size() const { return static_cast<int>(triples.size()); }
};

/// Uniform weights; ρ̂_E is the sample mean of φ(s_n, a_n).
OfflineBatch offline_batch_from_buffer(const TransitionBuffer& buffer, const FeatureMap& features,
                                       int n_states);

/// All steps t < H of every trajectory, weighted by γ^t; ρ̂_E from empirical_fev.
OfflineBatch offline_batch_from_dataset(const TrajectoryDataset& data, const FeatureMap& features);

/// How (1−γ)⟨ν0, V⟩ is evaluated: with ν0 itself, or through the flow
/// identity as Σ_n p_n (V(s_n) − γ V(s'_n)).
enum class Nu0Mode { kKnownNu0, kExpertFlow };

/// Ĝ(w,θ) = −⟨ρ̂_E,w⟩ − (1/η) log Σ_n p_n e^{−ηδ̂_n} + ν0 term, with
/// δ̂_n = w⊤φ_n + γV_θ(s'_n) − θ⊤φ_n and V_θ the softmin under uniform π_0.
class OfflineObjective {
 public:
  OfflineObjective(const FeatureMap& features, const OfflineBatch& batch, const Vector& nu0,
                   double gamma, double eta, double alpha, Nu0Mode mode);

  struct Evaluation {
    double value = 0.0;
    Vector grad_w;
    Vector grad_theta;
    Vector delta_hat;  // per sample
    Vector z_star;     // DV minimizer, sums to 1
    double nu0_term = 0.0;
  };

  Evaluation evaluate(const Vector& w, const Vector& theta, bool with_gradient = true) const;
  double value(const Vector& w, const Vector& theta) const { return evaluate(w, theta, false).value; }
  /// Donsker–Varadhan form S = −⟨ρ̂,w⟩ + Σ z_n(δ̂_n + (1/η) log(z_n/p_n)) + ν0 term.
  double dv_saddle(const Vector& w, const Vector& theta, const Vector& z) const;

  Vector v(const Vector& theta) const;
  int m() const { return features_.m(); }
  double eta() const { return eta_; }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  const OfflineBatch& batch() const { return batch_; }

 private:
  FeatureMap features_;
  OfflineBatch batch_;
  Vector nu0_;
  double gamma_;
  double eta_;
  double alpha_;
  Nu0Mode mode_;
  Policy uniform_;
};

double offline_objective(const Vector& w, const Vector& theta, const FeatureMap& features,
                         const OfflineBatch& batch, const Vector& nu0, double gamma, Nu0Mode mode,
                         double eta, double alpha);

/// Closed-form minimizer of the DV saddle over z: z_n ∝ p_n e^{−ηδ̂_n}.
Vector dv_minimizer(const Vector& delta_hat, const Vector& weights, double eta);

struct OfflineConfig {
  double eta = 10.0;
  double alpha = 1.0;
  Nu0Mode nu0_mode = Nu0Mode::kExpertFlow;
  WKind w_kind = WKind::kSimplex;
  std::optional<double> theta_radius;
  double beta_floor = 1e-3;
  ExactCriticConfig critic{1e-6, 20000, true};
  bool dv_alternating = false;
  double dv_z_step = 0.5;  // entropic step toward z* in the alternating scheme
};

struct OfflineResult {
  Policy policy = Policy::uniform(1, 1);
  CriticParams params;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  double theta_radius = 0.0;
  /// α from the offline error bound with plug-in estimates (logged only).
  double alpha_theory = 0.0;
};

/// One critic solve on Ĝ followed by one actor step from uniform π_0.
OfflineResult op2il_run(const FeatureMap& features, const Vector& nu0, double gamma,
                        const OfflineBatch& batch, const OfflineConfig& config);

/// Population objectives with the expert occupancy as center:
/// feature form uses δ and Φ⊤μ_E, state-action form uses Φδ and μ_E.
struct BiasReport {
  double g_feature = 0.0;
  double g_sa = 0.0;
  double gap = 0.0;
  double bound = 0.0;   // e·η·B²
  double b = 0.0;       // B = 1 + 2(1+|log β̂|)/(1−γ)
  bool bound_applies = false;  // ηB ≤ 1
};

BiasReport feature_vs_sa_bias(const Vector& w, const Vector& theta, const Vector& expert_mu,
                              const FeatureMap& features, const Vector& nu0, double gamma, double eta,
                              double alpha, double beta_hat);

}  // namespace ppil
