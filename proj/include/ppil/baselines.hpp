#pragma once

#include "ppil/common.hpp"
#include "ppil/ppm.hpp"

#include <optional>
#include <string>

namespace ppil {

/// θ-only maximization of the mirror-descent objective at fixed w_k.
/// `objective` must be built with with_expert_term = false.
CriticResult md_policy_eval(const LogisticObjective& objective, const Vector& w_k, double radius,
                            const ExactCriticConfig& config,
                            const std::optional<Vector>& theta_init = std::nullopt);

/// w_{k+1,i} ∝ w_{k,i} exp(−β (ρ̂_E(i) − λ_k(i))). Simplex only.
Vector md_cost_update(const Vector& w_k, const Vector& expert_fev_hat, const Vector& current_fev,
                      double beta, WKind w_kind = WKind::kSimplex);

struct MdConfig {
  double eta = 10.0;
  double alpha = 1.0;
  double beta = 0.5;  // cost step
  int K = 50;
  ExactCriticConfig exact;
  WKind w_kind = WKind::kSimplex;
  std::optional<double> theta_radius;
  double beta_hat = 0.0;
  double beta_floor = 1e-3;
  bool warm_start = true;
};

/// Cost step from the tuned tabular presets; 0.5 when the name is unknown.
double md_beta_preset(const std::string& env_name);

/// Alternating scheme: θ_k for fixed w_k, actor step, then cost step.
/// Logged G values are those of the θ-only objective.
RunResult md_run(const TabularMdp& mdp, const FeatureMap& features, const Vector& expert_fev,
                 const MdConfig& config, const std::optional<ReturnScale>& scale = std::nullopt);

}  // namespace ppil
