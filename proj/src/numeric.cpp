#include "ppil/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ppil::numeric {

double logsumexp(const Vector& x) {
  if (x.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

double weighted_logsumexp(const Vector& p, const Vector& x, double floor) {
  Vector logp = p.array().max(floor).log().matrix();
  return logsumexp(logp + x);
}

Vector tilt(const Vector& p, const Vector& x, double floor) {
  Vector z = p.array().max(floor).log().matrix() + x;
  const double m = z.maxCoeff();
  Vector e = (z.array() - m).exp().matrix();
  // Coordinates with zero weight stay exactly zero.
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) <= 0.0) e(i) = 0.0;
  const double s = e.sum();
  return e / s;
}

Vector project_simplex(const Vector& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, tau = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) tau = t;
  }
  return (v.array() - tau).max(0.0).matrix();
}

Vector project_l2_ball(const Vector& v, double radius) {
  const double n = v.norm();
  return n <= radius ? v : Vector(v * (radius / n));
}

Vector project_box(const Vector& v, double radius) {
  return v.cwiseMax(-radius).cwiseMin(radius);
}

double kl_divergence(const Vector& p, const Vector& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    if (q(i) <= 0.0) return std::numeric_limits<double>::infinity();
    s += p(i) * std::log(p(i) / q(i));
  }
  return s;
}

bool is_probability_vector(const Vector& v, double tol) {
  if (v.size() == 0 || !v.allFinite()) return false;
  if (v.minCoeff() < -tol) return false;
  return std::abs(v.sum() - 1.0) <= tol;
}

double min_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace ppil::numeric
