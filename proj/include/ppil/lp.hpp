#pragma once

#include "ppil/common.hpp"
#include "ppil/features.hpp"
#include "ppil/mdp.hpp"

namespace ppil {

/// min c⊤x  s.t.  A_eq x = b_eq,  A_ub x ≤ b_ub,  lower ≤ x ≤ upper.
/// Empty bound vectors mean x ≥ 0; use ±infinity for free directions.
struct DenseLp {
  Vector c;
  Matrix a_eq;
  Vector b_eq;
  Matrix a_ub;
  Vector b_ub;
  Vector lower;
  Vector upper;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

const char* to_string(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  double value = 0.0;
  Vector x;
  int iterations = 0;
};

/// Largest standard-form tableau accepted (rows x columns).
inline constexpr long kLpMaxTableau = 4'000'000;

/// Two-phase dense simplex; Dantzig pricing with a Bland fallback on
/// degenerate streaks.
LpResult solve_lp(const DenseLp& lp, double tol = 1e-9);

struct QLpResult {
  double value = 0.0;  // ρ*_c
  Vector v;
  Vector q;            // c + γPV
};

/// max (1−γ)⟨ν0,V⟩ s.t. Q ≥ BV, Q = c + γPV, solved in V alone.
QLpResult forward_q_lp(const TabularMdp& mdp, const Vector& cost);

struct PrimalQLpResult {
  double value = 0.0;
  Vector mu;
  Vector d;
};

/// min ⟨μ,c⟩ s.t. B⊤d = γP⊤μ + (1−γ)ν0, d = μ, d ≥ 0.
PrimalQLpResult primal_q_lp(const TabularMdp& mdp, const Vector& cost);

struct IlPrimalResult {
  double zeta = 0.0;
  Vector mu;
};

/// min_{μ ∈ F, t} t  s.t.  ⟨μ − μ_E, φ_i⟩ ≤ t for every feature i.
IlPrimalResult il_primal_lp(const TabularMdp& mdp, const FeatureMap& features, const Vector& expert_mu);

/// min_{μ ∈ F} ‖Φ⊤μ − Φ⊤μ_E‖₂ by fully corrective Frank–Wolfe; vertices
/// come from value iteration on the gradient cost.
IlPrimalResult il_primal_ball(const TabularMdp& mdp, const FeatureMap& features, const Vector& expert_mu,
                              int max_iters = 200, double tol = 1e-10);

struct Certificate {
  double eps1 = 0.0;  // ⟨μ_E, c_w⟩ − (1−γ)⟨ν0, V⟩, clipped at 0
  double eps2 = 0.0;  // largest violation of c_w + γPV ≥ BV
};

Certificate eps_certificate(const TabularMdp& mdp, const FeatureMap& features, const Vector& w,
                            const Vector& v, const Vector& expert_mu);

}  // namespace ppil
