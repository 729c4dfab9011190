#pragma once

#include "ppil/common.hpp"

namespace ppil::numeric {

/// log Σ exp(x_i), max-shifted.
double logsumexp(const Vector& x);

/// log Σ p_i exp(x_i) for nonnegative weights; zero weights are clamped to
/// `floor` so they stay inside the log without contributing.
double weighted_logsumexp(const Vector& p, const Vector& x, double floor = 1e-300);

/// Normalized exponential tilt: q_i ∝ p_i exp(x_i).
Vector tilt(const Vector& p, const Vector& x, double floor = 1e-300);

/// Euclidean projection onto the probability simplex (sort and threshold).
Vector project_simplex(const Vector& v);

/// Euclidean projection onto the l2 ball of the given radius.
Vector project_l2_ball(const Vector& v, double radius);

/// Euclidean projection onto the l-infinity ball of the given radius.
Vector project_box(const Vector& v, double radius);

/// KL(p || q) with the 0 log 0 = 0 convention.
double kl_divergence(const Vector& p, const Vector& q);

bool is_probability_vector(const Vector& v, double tol);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& sym);

}  // namespace ppil::numeric
