#pragma once

#include "ppil/common.hpp"
#include "ppil/features.hpp"
#include "ppil/mdp.hpp"

#include <vector>

namespace ppil {

enum class WKind { kSimplex, kBall };

/// Worst-case excess cost over the linear cost class: max_i (λ_i − ρ_i) for
/// the simplex, ‖λ − ρ‖₂ for the unit ball.
double c_distance_fev(const Vector& learner_fev, const Vector& expert_fev, WKind kind);

double c_distance(const TabularMdp& mdp, const Policy& policy, const Vector& expert_fev,
                  const FeatureMap& features, WKind kind);

/// J = −ρ_c, evaluated for the uniform and expert policies once so that any
/// policy can be placed on the 0..1 scale.
struct ReturnScale {
  double uniform_return = 0.0;
  double expert_return = 1.0;
  double normalize(double ret) const;
};

ReturnScale make_return_scale(const TabularMdp& mdp, const Policy& expert, const Vector& cost);
ReturnScale make_return_scale(const TabularMdp& mdp, const Policy& expert);

double policy_return(const TabularMdp& mdp, const Policy& policy, const Vector& cost);
double policy_return(const TabularMdp& mdp, const Policy& policy);

/// (J(π) − J(uniform)) / (J(π_E) − J(uniform)) under the true cost.
double normalized_return(const TabularMdp& mdp, const Policy& policy, const Policy& expert);

struct RecoveredCostReport {
  Policy greedy;             // π* for the recovered cost
  double true_cost = 0.0;    // ρ_{c_true}(π*_{c_K})
  double true_return = 0.0;
  double normalized_return = 0.0;
  Vector v_recovered;        // V* under the recovered cost
  Vector v_true;             // V* under the true cost
};

RecoveredCostReport recovered_cost_eval(const TabularMdp& mdp, const Vector& c_recovered,
                                        const Policy& expert);

struct TransferReport {
  double optimal_target = 0.0;    // π*_{M̃, c_true}
  double expert_source = 0.0;     // π_E = π*_{M, c_true}, run in M̃
  double recovered_target = 0.0;  // π*_{M̃, c_K}
  double learned = 0.0;           // π_K, run in M̃
};

/// All entries are returns J = −ρ_{c_true} in the target MDP.
TransferReport transfer_eval(const TabularMdp& source, const TabularMdp& target,
                             const Vector& c_recovered, const Policy& learned);

}  // namespace ppil
