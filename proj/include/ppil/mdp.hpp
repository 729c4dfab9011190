#pragma once

#include "ppil/common.hpp"

#include <vector>

namespace ppil {

/// Finite discounted MDP. State-action pairs are indexed s * n_actions + a,
/// so `transition` has one row per pair and one column per next state.
class TabularMdp {
 public:
  TabularMdp(int n_states, int n_actions, Matrix transition, Vector init_dist,
             Vector true_cost, double gamma);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int n_pairs() const { return n_states_ * n_actions_; }
  int index(int s, int a) const { return s * n_actions_ + a; }
  const Matrix& transition() const { return transition_; }
  const Vector& init_dist() const { return init_dist_; }
  const Vector& true_cost() const { return true_cost_; }
  double gamma() const { return gamma_; }

  /// Same dynamics with a different discount or cost.
  TabularMdp with_cost(Vector cost) const;

 private:
  int n_states_;
  int n_actions_;
  Matrix transition_;
  Vector init_dist_;
  Vector true_cost_;
  double gamma_;
};

/// Stationary Markov policy, one row per state.
class Policy {
 public:
  explicit Policy(Matrix probs);
  static Policy uniform(int n_states, int n_actions);
  static Policy deterministic(const std::vector<int>& actions, int n_actions);

  const Matrix& probs() const { return probs_; }
  int n_states() const { return static_cast<int>(probs_.rows()); }
  int n_actions() const { return static_cast<int>(probs_.cols()); }
  double operator()(int s, int a) const { return probs_(s, a); }
  /// Flattened in pair order.
  Vector flat() const;

 private:
  Matrix probs_;
};

/// Normalized discounted state-action visitation.
class OccupancyMeasure {
 public:
  explicit OccupancyMeasure(Vector mu);
  const Vector& mu() const { return mu_; }
  double operator()(Eigen::Index i) const { return mu_(i); }
  Eigen::Index size() const { return mu_.size(); }

 private:
  Vector mu_;
};

/// State-to-state kernel under a policy.
Matrix policy_transition(const TabularMdp& mdp, const Policy& policy);

/// Expected one-step cost under a policy, per state.
Vector policy_cost(const TabularMdp& mdp, const Policy& policy, const Vector& cost);

/// Per-state marginal Σ_a μ(s,a).
Vector state_marginal(const Vector& mu, int n_states, int n_actions);

OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const Policy& policy,
                                   double tol = 1e-12);

/// π(a|s) = μ(s,a)/Σ_a' μ(s,a'); unvisited states get the uniform row.
Policy policy_from_occupancy(const OccupancyMeasure& mu, int n_states, int n_actions);

/// V^π_c solved from (I − γP_π)V = c_π.
Vector policy_evaluation(const TabularMdp& mdp, const Policy& policy, const Vector& cost);

/// ⟨μ_π, c⟩, cross-checked against (1−γ)⟨ν0, V^π_c⟩.
double total_cost(const TabularMdp& mdp, const Policy& policy, const Vector& cost);

/// Q(s,a) = c(s,a) + γ Σ_s' P(s'|s,a) V(s').
Vector q_from_v(const TabularMdp& mdp, const Vector& cost, const Vector& v);

struct ValueIterationResult {
  Vector v;
  Vector q;
  Policy greedy;
  int iterations;
};

/// Greedy argmin with lowest-index tie-breaking among actions within
/// `tie_tol` of the row minimum.
Policy greedy_policy(const Vector& q, int n_states, int n_actions, double tie_tol = 1e-9);

ValueIterationResult value_iteration(const TabularMdp& mdp, const Vector& cost,
                                     double tol = 1e-10);

struct SoftValueIterationResult {
  Vector v;
  Vector q;
  Policy policy;
  int iterations;
};

/// Fixed point of V(s) = −(1/α) log Σ_a exp(−α Q(s,a)) and the induced
/// softmax policy π ∝ exp(−αQ).
SoftValueIterationResult soft_value_iteration(const TabularMdp& mdp, const Vector& cost,
                                              double alpha, double tol = 1e-10);

/// ‖B⊤μ − γP⊤μ − (1−γ)ν0‖∞.
double bellman_flow_residual(const TabularMdp& mdp, const Vector& mu);

/// Same MDP with actions relabelled: action a of the result behaves like
/// action perm[a] of the input. Costs are kept as indexed.
TabularMdp permute_actions(const TabularMdp& mdp, const std::vector<int>& perm);

}  // namespace ppil
