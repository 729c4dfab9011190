#pragma once

#include "ppil/common.hpp"
#include "ppil/features.hpp"
#include "ppil/mdp.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ppil {

/// Numeric overrides for an environment constructor, e.g. {"gamma": 0.95}.
using EnvParams = std::map<std::string, double>;

struct Env {
  std::string name;
  TabularMdp mdp;
  FeatureMap features;
  int grid_rows = 0;  // WindyGrid only
  int grid_cols = 0;
};

/// Names accepted by make_env, in suite order.
const std::vector<std::string>& env_names();

/// Builds a benchmark MDP with tabular features. Unknown names or
/// parameter keys raise ConfigError.
Env make_env(const std::string& name, const EnvParams& params = {});

/// Parameter keys and default values of an environment.
EnvParams env_defaults(const std::string& name);

/// Action permutation that swaps Up with Right and Down with Left.
std::vector<int> windy_swap_permutation();

/// Tuned hyperparameters of the tabular experiments.
struct EnvPreset {
  int n_trajs = 50;
  double eta = 10.0;
  double alpha = 1.0;
  double md_beta = 0.5;
  int horizon = 100;
};

EnvPreset env_preset(const std::string& name);

/// Random MDP with dense transitions, costs in [0,1] and ν0 on all states.
TabularMdp random_mdp(int n_states, int n_actions, double gamma, std::uint64_t seed);

/// Rank-m linear MDP: P = ΦM with random simplex rows in Φ (S·A x m) and M (m x S).
Env random_linear_mdp(int n_states, int n_actions, int m, double gamma, std::uint64_t seed);

}  // namespace ppil
