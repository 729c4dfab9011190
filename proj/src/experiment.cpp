#include "ppil/experiment.hpp"

#include "ppil/rng.hpp"

namespace ppil {

Trial make_trial(const std::string& env_name, const EnvParams& params, TrajectoryDataset data,
                 ExpertKind kind) {
  Env env = make_env(env_name, params);
  if (data.n_states != env.mdp.n_states() || data.n_actions != env.mdp.n_actions())
    throw ConfigError("dataset shape does not match environment " + env_name);
  Policy expert = generate_expert(env.mdp, env.mdp.true_cost(), kind);
  Vector mu = occupancy_measure(env.mdp, expert).mu();
  Vector rho = empirical_fev(data, env.features);
  ReturnScale scale = make_return_scale(env.mdp, expert);
  const double beta_hat = min_feature_excitation(env.features, mu);
  return Trial{std::move(env), std::move(expert), std::move(data), std::move(rho), std::move(mu), scale, beta_hat};
}

Trial make_trial(const std::string& env_name, const EnvParams& params, std::uint64_t seed, int n_trajs,
                 int horizon, ExpertKind kind) {
  const EnvPreset preset = env_preset(env_name);
  Env env = make_env(env_name, params);
  Policy expert = generate_expert(env.mdp, env.mdp.true_cost(), kind);
  TrajectoryDataset data = sample_trajectories(env.mdp, expert, n_trajs > 0 ? n_trajs : preset.n_trajs,
                                               horizon > 0 ? horizon : preset.horizon, derive_seed(seed, 1));
  return make_trial(env_name, params, std::move(data), kind);
}

RunResult run_online(const Trial& trial, PpmConfig config, std::uint64_t seed) {
  config.seed = derive_seed(seed, 2);
  if (config.beta_hat <= 0.0) config.beta_hat = trial.beta_hat;
  return p2il_run(trial.env.mdp, trial.env.features, trial.expert_fev, config, trial.scale);
}

RunResult run_md(const Trial& trial, MdConfig config) {
  if (config.beta_hat <= 0.0) config.beta_hat = trial.beta_hat;
  return md_run(trial.env.mdp, trial.env.features, trial.expert_fev, config, trial.scale);
}

RunSummary summarize(const Trial& trial, const RunResult& run, WKind w_kind) {
  const Policy& pi = run.last_policy();
  RunSummary s;
  s.final_return = policy_return(trial.env.mdp, pi);
  s.normalized_return = trial.scale.normalize(s.final_return);
  s.d_c = c_distance(trial.env.mdp, pi, fev(trial.env.features, trial.expert_mu), trial.env.features, w_kind);
  s.wallclock_ms = run.log.empty() ? 0.0 : run.log.back().wallclock_ms;
  return s;
}

}  // namespace ppil
