#include "ppil/expert_data.hpp"

#include "ppil/rng.hpp"

#include <cmath>

namespace ppil {

Policy generate_expert(const TabularMdp& mdp, const Vector& cost, ExpertKind kind) {
  if (kind.type == ExpertKind::Type::kSoft) return soft_value_iteration(mdp, cost, kind.alpha).policy;
  return value_iteration(mdp, cost).greedy;
}

namespace {

int step(const TabularMdp& mdp, int s, int a, Rng& rng) {
  return rng.categorical(mdp.transition().row(mdp.index(s, a)));
}

int act(const Policy& policy, int s, Rng& rng) { return rng.categorical(policy.probs().row(s)); }

}  // namespace

TrajectoryDataset sample_trajectories(const TabularMdp& mdp, const Policy& policy, int n_e,
                                      int horizon, std::uint64_t seed) {
  if (n_e < 1) throw ConfigError("sample_trajectories: n_E must be at least 1");
  if (horizon < 0) throw ConfigError("sample_trajectories: horizon must be nonnegative");
  Rng rng(seed);
  TrajectoryDataset data;
  data.horizon = horizon;
  data.gamma = mdp.gamma();
  data.seed = seed;
  data.n_states = mdp.n_states();
  data.n_actions = mdp.n_actions();
  data.trajectories.reserve(n_e);
  for (int l = 0; l < n_e; ++l) {
    Trajectory tr;
    tr.states.reserve(horizon + 1);
    tr.actions.reserve(horizon + 1);
    int s = rng.categorical(mdp.init_dist());
    for (int t = 0; t <= horizon; ++t) {
      const int a = act(policy, s, rng);
      tr.states.push_back(s);
      tr.actions.push_back(a);
      if (t < horizon) s = step(mdp, s, a, rng);
    }
    data.trajectories.push_back(std::move(tr));
  }
  return data;
}

Vector empirical_fev(const TrajectoryDataset& data, const FeatureMap& features) {
  if (data.trajectories.empty()) throw ConfigError("empirical_fev: empty dataset");
  if (data.n_states * data.n_actions != features.n_pairs())
    throw ConfigError("empirical_fev: dataset shape does not match features");
  const Matrix& phi = features.phi();
  Vector rho = Vector::Zero(features.m());
  for (const auto& tr : data.trajectories) {
    double disc = 1.0;
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
      rho += disc * phi.row(tr.states[t] * data.n_actions + tr.actions[t]).transpose();
      disc *= data.gamma;
    }
  }
  return rho * ((1.0 - data.gamma) / data.n_e());
}

FevPresets fev_presets(double epsilon, double delta, int m, double gamma) {
  if (!(epsilon > 0.0 && epsilon <= 1.0) || !(delta > 0.0 && delta < 1.0))
    throw ConfigError("fev_presets: epsilon in (0,1], delta in (0,1) required");
  const double n = 2.0 * std::log(2.0 * m / delta) / (epsilon * epsilon);
  const double h = std::log(1.0 / epsilon) / (1.0 - gamma);
  // Guard against values like 877.0000000001 produced by rounding.
  auto ceil_safe = [](double x) { return static_cast<int>(std::ceil(x - 1e-9)); };
  return {std::max(1, ceil_safe(n)), std::max(0, ceil_safe(h))};
}

TransitionBuffer sample_occupancy_buffer(const TabularMdp& mdp, const Policy& policy, int n,
                                         DrawMode mode, std::uint64_t seed, int horizon) {
  if (n < 1) throw ConfigError("sample_occupancy_buffer: n must be at least 1");
  Rng rng(seed);
  TransitionBuffer buf;
  buf.mode = mode;
  buf.triples.reserve(n);
  const double g = mdp.gamma();
  if (mode == DrawMode::kGeometric) {
    for (int i = 0; i < n; ++i) {
      const int T = rng.geometric(g);
      int s = rng.categorical(mdp.init_dist());
      int a = act(policy, s, rng);
      for (int t = 0; t < T; ++t) {
        s = step(mdp, s, a, rng);
        a = act(policy, s, rng);
      }
      buf.triples.push_back({s, a, step(mdp, s, a, rng)});
    }
    return buf;
  }
  if (horizon < 1) throw ConfigError("sample_occupancy_buffer: episodic mode needs horizon >= 1");
  while (static_cast<int>(buf.triples.size()) < n) {
    int s = rng.categorical(mdp.init_dist());
    double keep = 1.0;
    for (int t = 0; t < horizon && static_cast<int>(buf.triples.size()) < n; ++t) {
      const int a = act(policy, s, rng);
      const int s_next = step(mdp, s, a, rng);
      if (rng.uniform() < keep) buf.triples.push_back({s, a, s_next});
      keep *= g;
      s = s_next;
    }
  }
  return buf;
}

}  // namespace ppil
