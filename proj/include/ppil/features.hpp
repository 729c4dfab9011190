#pragma once

#include "ppil/common.hpp"
#include "ppil/mdp.hpp"

#include <optional>

namespace ppil {

/// Feature matrix Φ with simplex rows, optionally with a factor M (m x S)
/// such that P = ΦM.
class FeatureMap {
 public:
  FeatureMap(Matrix phi, std::optional<Matrix> factor_m = std::nullopt);

  const Matrix& phi() const { return phi_; }
  int m() const { return static_cast<int>(phi_.cols()); }
  int n_pairs() const { return static_cast<int>(phi_.rows()); }
  bool has_factor() const { return factor_m_.has_value(); }
  /// Throws ConfigError when the factor is absent.
  const Matrix& factor_m() const;
  const std::optional<Matrix>& maybe_factor_m() const { return factor_m_; }

 private:
  Matrix phi_;
  std::optional<Matrix> factor_m_;
};

/// Φ = I over state-action pairs, M = P.
FeatureMap tabular_features(const TabularMdp& mdp);

/// ‖P − ΦM‖∞ (max absolute entry).
double validate_linear_mdp(const TabularMdp& mdp, const FeatureMap& features);

/// λ = Φ⊤μ.
Vector fev(const FeatureMap& features, const Vector& mu);

/// Smallest eigenvalue of E_{(s,a)∼μ}[φφ⊤].
double min_feature_excitation(const FeatureMap& features, const Vector& mu);

/// Radius D = (1 + |log β|)/(1 − γ) of the Θ ball, with β floored.
double theta_radius(double beta, double gamma, double beta_floor = 1e-3);

}  // namespace ppil
