#include "ppil/features.hpp"

#include "ppil/numeric.hpp"

#include <cmath>

namespace ppil {

FeatureMap::FeatureMap(Matrix phi, std::optional<Matrix> factor_m)
    : phi_(std::move(phi)), factor_m_(std::move(factor_m)) {
  if (phi_.rows() == 0 || phi_.cols() == 0) throw ConfigError("features: empty phi");
  if (!phi_.allFinite() || phi_.minCoeff() < 0.0)
    throw ConfigError("features: phi entries must be nonnegative");
  for (Eigen::Index i = 0; i < phi_.rows(); ++i)
    if (std::abs(phi_.row(i).sum() - 1.0) > kDerivedTol)
      throw ConfigError("features: every row of phi must lie in the simplex");
  if (factor_m_) {
    const Matrix& m = *factor_m_;
    if (m.rows() != phi_.cols()) throw ConfigError("features: factor_m must have m rows");
    if (!m.allFinite() || m.minCoeff() < 0.0)
      throw ConfigError("features: factor_m entries must be nonnegative");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (std::abs(m.row(i).sum() - 1.0) > kDerivedTol)
        throw ConfigError("features: factor_m rows must be probability vectors");
  }
}

const Matrix& FeatureMap::factor_m() const {
  if (!factor_m_) throw ConfigError("features: factor_m is required in exact mode");
  return *factor_m_;
}

FeatureMap tabular_features(const TabularMdp& mdp) {
  return FeatureMap(Matrix::Identity(mdp.n_pairs(), mdp.n_pairs()), mdp.transition());
}

double validate_linear_mdp(const TabularMdp& mdp, const FeatureMap& features) {
  const Matrix& m = features.factor_m();
  if (features.n_pairs() != mdp.n_pairs() || m.cols() != mdp.n_states())
    throw ConfigError("features: shape does not match mdp");
  return (mdp.transition() - features.phi() * m).cwiseAbs().maxCoeff();
}

Vector fev(const FeatureMap& features, const Vector& mu) {
  if (mu.size() != features.n_pairs()) throw ConfigError("fev: occupancy length mismatch");
  return features.phi().transpose() * mu;
}

double min_feature_excitation(const FeatureMap& features, const Vector& mu) {
  if (mu.size() != features.n_pairs()) throw ConfigError("excitation: occupancy length mismatch");
  const Matrix& phi = features.phi();
  const Matrix cov = phi.transpose() * mu.asDiagonal() * phi;
  return std::max(0.0, numeric::min_eigenvalue(cov));
}

double theta_radius(double beta, double gamma, double beta_floor) {
  const double b = std::max(beta, beta_floor);
  return (1.0 + std::abs(std::log(b))) / (1.0 - gamma);
}

}  // namespace ppil
