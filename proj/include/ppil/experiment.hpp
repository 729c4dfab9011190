#pragma once

#include "ppil/baselines.hpp"
#include "ppil/envs.hpp"
#include "ppil/eval.hpp"
#include "ppil/expert_data.hpp"
#include "ppil/ppm.hpp"

#include <cstdint>
#include <string>

namespace ppil {

/// One seeded imitation problem: environment, optimal expert, its
/// demonstrations and the derived estimates every learner starts from.
struct Trial {
  Env env;
  Policy expert;
  TrajectoryDataset data;
  Vector expert_fev;  // ρ̂_E from the demonstrations
  Vector expert_mu;   // exact expert occupancy (evaluation only)
  ReturnScale scale;
  double beta_hat = 0.0;  // feature excitation of the expert occupancy
};

/// Demonstrations are drawn with derive_seed(seed, 1). n_trajs or horizon
/// <= 0 fall back to the environment preset.
Trial make_trial(const std::string& env_name, const EnvParams& params, std::uint64_t seed,
                 int n_trajs = 0, int horizon = 0, ExpertKind kind = ExpertKind::greedy());

/// Same as above with a caller-provided dataset (e.g. read from disk).
Trial make_trial(const std::string& env_name, const EnvParams& params, TrajectoryDataset data,
                 ExpertKind kind = ExpertKind::greedy());

struct RunSummary {
  double final_return = 0.0;
  double normalized_return = 0.0;
  double d_c = 0.0;
  double wallclock_ms = 0.0;
};

/// Online learner on a trial; the run seed is derive_seed(seed, 2).
RunResult run_online(const Trial& trial, PpmConfig config, std::uint64_t seed);
RunResult run_md(const Trial& trial, MdConfig config);

/// Summary of the last iterate of a run.
RunSummary summarize(const Trial& trial, const RunResult& run, WKind w_kind);

}  // namespace ppil
