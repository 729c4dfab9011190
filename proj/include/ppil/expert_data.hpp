#pragma once

#include "ppil/common.hpp"
#include "ppil/features.hpp"
#include "ppil/mdp.hpp"

#include <cstdint>
#include <vector>

namespace ppil {

struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;
};

/// n_E rollouts of length H+1 from ν0.
struct TrajectoryDataset {
  std::vector<Trajectory> trajectories;
  int horizon = 0;
  double gamma = 0.0;
  int n_states = 0;
  int n_actions = 0;
  std::uint64_t seed = 0;
  int n_e() const { return static_cast<int>(trajectories.size()); }
};

struct Transition {
  int s;
  int a;
  int s_next;
};

enum class DrawMode { kGeometric, kEpisodic };

struct TransitionBuffer {
  std::vector<Transition> triples;
  DrawMode mode = DrawMode::kGeometric;
  std::size_t size() const { return triples.size(); }
};

struct ExpertKind {
  enum class Type { kGreedy, kSoft } type = Type::kGreedy;
  double alpha = 0.0;
  static ExpertKind greedy() { return {}; }
  static ExpertKind soft(double alpha) { return {Type::kSoft, alpha}; }
};

Policy generate_expert(const TabularMdp& mdp, const Vector& cost, ExpertKind kind);

TrajectoryDataset sample_trajectories(const TabularMdp& mdp, const Policy& policy, int n_e,
                                      int horizon, std::uint64_t seed);

/// ρ̂ = (1−γ)(1/n_E) Σ_ℓ Σ_{t≤H} γ^t φ(s_t, a_t).
Vector empirical_fev(const TrajectoryDataset& data, const FeatureMap& features);

struct FevPresets {
  int n_e;
  int horizon;
};

/// Ceilings of n_E ≥ 2 log(2m/δ)/ε² and H ≥ log(1/ε)/(1−γ).
FevPresets fev_presets(double epsilon, double delta, int m, double gamma);

/// Samples n triples with (s,a) drawn from the policy's occupancy measure.
/// Geometric mode stops a rollout after T ~ Geometric(1−γ) steps.
/// Episodic mode rolls episodes of `horizon` steps and keeps step t with
/// probability γ^t, which matches the occupancy up to truncation.
TransitionBuffer sample_occupancy_buffer(const TabularMdp& mdp, const Policy& policy, int n,
                                         DrawMode mode, std::uint64_t seed, int horizon = 0);

}  // namespace ppil
