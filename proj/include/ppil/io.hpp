#pragma once

#include "ppil/bsge.hpp"
#include "ppil/common.hpp"
#include "ppil/expert_data.hpp"
#include "ppil/features.hpp"
#include "ppil/mdp.hpp"
#include "ppil/ppm.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ppil::io {

using Json = nlohmann::json;

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const char* what);
/// Row-major nested arrays.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const char* what);

/// {"n_states","n_actions","transition","init_dist","true_cost","gamma"}
/// plus "features": {"phi","factor_m"?} when features are given.
Json mdp_to_json(const TabularMdp& mdp, const FeatureMap* features = nullptr);
TabularMdp mdp_from_json(const Json& j);
/// Features stored under "features", or std::nullopt.
std::optional<FeatureMap> features_from_json(const Json& j);

Json policy_to_json(const Policy& policy);
Policy policy_from_json(const Json& j);

Json critics_to_json(const std::vector<CriticParams>& critics);

/// Header line {n_E, H, gamma, seed, n_states, n_actions}, then one
/// {"states":[...],"actions":[...]} object per trajectory.
void write_dataset_jsonl(const std::string& path, const TrajectoryDataset& data);
TrajectoryDataset read_dataset_jsonl(const std::string& path);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// k,G_value,grad_norm,d_C_hat,true_return,normalized_return,wallclock_ms
void write_run_csv(const std::string& path, const std::vector<IterationLog>& log);
/// t,n_t,beta_t,G_gap_if_oracle,grad_norm_hat
void write_sgd_diagnostics_csv(const std::string& path, const std::vector<SgdDiagnostics>& diag);

/// Shortest decimal text that round-trips the double.
std::string format_double(double x);

}  // namespace ppil::io
