#pragma once
// Reference computations used only by tests. They avoid the library's own
// solvers so that agreement is meaningful.

#include "ppil/features.hpp"
#include "ppil/mdp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using ppil::Matrix;
using ppil::Vector;

/// μ = (1−γ) Σ_t γ^t ν_t ⊗ π, summed until γ^t < tol.
inline Vector occupancy_power_series(const ppil::TabularMdp& mdp, const ppil::Policy& pi, double tol = 1e-15) {
  const int S = mdp.n_states(), A = mdp.n_actions();
  Vector mu = Vector::Zero(S * A);
  Vector nu = mdp.init_dist();
  double g = 1.0;
  while (g > tol) {
    Vector next = Vector::Zero(S);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const double x = nu(s) * pi(s, a);
        mu(s * A + a) += (1.0 - mdp.gamma()) * g * x;
        next += x * mdp.transition().row(s * A + a).transpose();
      }
    nu = next;
    g *= mdp.gamma();
  }
  return mu;
}

/// Enumerates all deterministic policies (A^S of them) and returns the
/// per-state minimal value under `cost`, evaluated by a dense solve.
inline Vector brute_force_optimal_v(const ppil::TabularMdp& mdp, const Vector& cost) {
  const int S = mdp.n_states(), A = mdp.n_actions();
  Vector best = Vector::Constant(S, std::numeric_limits<double>::infinity());
  std::vector<int> act(S, 0);
  while (true) {
    Matrix p(S, S);
    Vector c(S);
    for (int s = 0; s < S; ++s) {
      p.row(s) = mdp.transition().row(s * A + act[s]);
      c(s) = cost(s * A + act[s]);
    }
    Vector v = (Matrix::Identity(S, S) - mdp.gamma() * p).partialPivLu().solve(c);
    best = best.cwiseMin(v);
    int i = 0;
    while (i < S && ++act[i] == A) act[i++] = 0;
    if (i == S) break;
  }
  return best;
}

/// Central differences of a scalar function.
inline Vector central_diff(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(1e-8, std::max(a.norm(), b.norm()));
}

/// Primal proximal step over the state-action polytope with the simplex
/// cost class, solved by a log-barrier interior-point method:
///   min_{d, t}  t + D(Φ⊤d ‖ ref)/η + H(d ‖ π_prev)/α
///   s.t.  (B − γP)⊤ d = (1−γ)ν0,  Φ⊤d − ρ̂ ≤ t,  d > 0,
/// where H(d‖π) = Σ d(s,a) log(π_d(a|s)/π(a|s)). Requires P = ΦM.
struct ProxSolution {
  Vector d;
  Vector lambda;
  ppil::Policy policy = ppil::Policy::uniform(1, 1);
  double value = 0.0;
};

inline ProxSolution prox_barrier_newton(const ppil::TabularMdp& mdp, const ppil::FeatureMap& features,
                                        const ppil::Policy& pi_prev, const Vector& ref_fev,
                                        const Vector& rho_hat, double eta, double alpha) {
  const int S = mdp.n_states(), A = mdp.n_actions(), n = S * A, m = features.m();
  const Matrix& phi = features.phi();
  Matrix e = Matrix::Zero(S, n);  // flow constraint (B − γP)⊤
  for (int j = 0; j < n; ++j) {
    e(j / A, j) += 1.0;
    e.col(j) -= mdp.gamma() * mdp.transition().row(j).transpose();
  }
  // Moves stay in the null space of the flow constraint: (d, t) = x0 + Z y.
  Eigen::JacobiSVD<Matrix> svd(e, Eigen::ComputeFullV);
  const Matrix null_d = svd.matrixV().rightCols(n - S);
  Matrix z = Matrix::Zero(n + 1, n - S + 1);
  z.topLeftCorner(n, n - S) = null_d;
  z(n, n - S) = 1.0;
  // Strictly feasible start: occupancy of the previous (full-support) policy.
  Vector x(n + 1);
  x.head(n) = occupancy_power_series(mdp, pi_prev);
  x(n) = (phi.transpose() * x.head(n) - rho_hat).maxCoeff() + 1.0;

  auto objective = [&](const Vector& v) {
    const Vector d = v.head(n);
    const Vector lam = phi.transpose() * d;
    double f = v(n);
    for (int i = 0; i < m; ++i)
      if (lam(i) > 0) f += lam(i) * std::log(lam(i) / ref_fev(i)) / eta;
    for (int s = 0; s < S; ++s) {
      const double ds = d.segment(s * A, A).sum();
      for (int a = 0; a < A; ++a) {
        const double w = d(s * A + a);
        if (w > 0) f += w * std::log(w / (ds * pi_prev(s, a))) / alpha;
      }
    }
    return f;
  };
  auto barrier = [&](const Vector& v, double tau, bool& ok) {
    ok = true;
    const Vector d = v.head(n);
    const Vector u = Vector::Constant(m, v(n)) + rho_hat - phi.transpose() * d;
    if (d.minCoeff() <= 0.0 || u.minCoeff() <= 0.0) {
      ok = false;
      return 0.0;
    }
    return tau * objective(v) - u.array().log().sum() - d.array().log().sum();
  };

  double tau = 1.0;
  for (int outer = 0; outer < 60; ++outer) {
    for (int it = 0; it < 100; ++it) {
      const Vector d = x.head(n);
      const Vector lam = phi.transpose() * d;
      const Vector u = Vector::Constant(m, x(n)) + rho_hat - lam;
      Vector g = Vector::Zero(n + 1);
      Matrix h = Matrix::Zero(n + 1, n + 1);
      g(n) = tau;
      // relative entropy on λ = Φ⊤d
      const Vector gl = ((lam.array() / ref_fev.array()).log() + 1.0).matrix() / eta;
      g.head(n) += tau * phi * gl;
      h.topLeftCorner(n, n) += tau * phi * (1.0 / (eta * lam.array())).matrix().asDiagonal() * phi.transpose();
      // conditional relative entropy
      for (int s = 0; s < S; ++s) {
        const double ds = d.segment(s * A, A).sum();
        for (int a = 0; a < A; ++a) {
          const int j = s * A + a;
          g(j) += tau * (std::log(d(j) / ds) - std::log(pi_prev(s, a))) / alpha;
          h(j, j) += tau / (alpha * d(j));
          for (int b = 0; b < A; ++b) h(j, s * A + b) -= tau / (alpha * ds);
        }
      }
      // barriers
      for (int i = 0; i < m; ++i) {
        Vector a_i = Vector::Zero(n + 1);
        a_i.head(n) = -phi.col(i);
        a_i(n) = 1.0;
        g -= a_i / u(i);
        h += a_i * a_i.transpose() / (u(i) * u(i));
      }
      for (int j = 0; j < n; ++j) {
        g(j) -= 1.0 / d(j);
        h(j, j) += 1.0 / (d(j) * d(j));
      }
      const Vector gy = z.transpose() * g;
      const Matrix hy = z.transpose() * h * z;
      const Vector dy = hy.ldlt().solve(-gy);
      const double decrement = -gy.dot(dy);
      if (!(decrement > 1e-14)) break;
      const Vector dx = z * dy;
      bool ok = false;
      const double f0 = barrier(x, tau, ok);
      double step = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
        const double f1 = barrier(x + step * dx, tau, ok);
        if (ok && f1 <= f0 - 0.25 * step * decrement) {
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      x += step * dx;
    }
    if ((n + m) / tau < 1e-11) break;
    tau *= 8.0;
  }
  ProxSolution out;
  out.d = x.head(n);
  out.lambda = phi.transpose() * out.d;
  Matrix probs(S, A);
  for (int s = 0; s < S; ++s) probs.row(s) = out.d.segment(s * A, A).transpose() / out.d.segment(s * A, A).sum();
  out.policy = ppil::Policy(probs);
  out.value = objective(x);
  return out;
}

}  // namespace oracle
