#include "ppil/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ppil::io {

namespace {

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  return j.at(key);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  return f;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(what) + ": expected numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json matrix_to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_to_json(m.row(i).transpose()));
  return a;
}

Matrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + ": expected a nonempty array of rows");
  const Vector first = vector_from_json(j[0], what);
  Matrix m(static_cast<Eigen::Index>(j.size()), first.size());
  for (size_t i = 0; i < j.size(); ++i) {
    const Vector r = vector_from_json(j[i], what);
    if (r.size() != first.size()) throw ConfigError(std::string(what) + ": ragged rows");
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

Json mdp_to_json(const TabularMdp& mdp, const FeatureMap* features) {
  Json j;
  j["n_states"] = mdp.n_states();
  j["n_actions"] = mdp.n_actions();
  j["transition"] = matrix_to_json(mdp.transition());
  j["init_dist"] = vector_to_json(mdp.init_dist());
  j["true_cost"] = vector_to_json(mdp.true_cost());
  j["gamma"] = mdp.gamma();
  if (features) {
    Json f;
    f["phi"] = matrix_to_json(features->phi());
    if (features->has_factor()) f["factor_m"] = matrix_to_json(features->factor_m());
    j["features"] = f;
  }
  return j;
}

TabularMdp mdp_from_json(const Json& j) {
  const int s = require(j, "n_states").get<int>();
  const int a = require(j, "n_actions").get<int>();
  return TabularMdp(s, a, matrix_from_json(require(j, "transition"), "transition"),
                    vector_from_json(require(j, "init_dist"), "init_dist"),
                    vector_from_json(require(j, "true_cost"), "true_cost"), require(j, "gamma").get<double>());
}

std::optional<FeatureMap> features_from_json(const Json& j) {
  if (!j.contains("features")) return std::nullopt;
  const Json& f = j.at("features");
  std::optional<Matrix> m;
  if (f.contains("factor_m")) m = matrix_from_json(f.at("factor_m"), "factor_m");
  return FeatureMap(matrix_from_json(require(f, "phi"), "phi"), m);
}

Json policy_to_json(const Policy& policy) { return Json{{"probs", matrix_to_json(policy.probs())}}; }

Policy policy_from_json(const Json& j) { return Policy(matrix_from_json(require(j, "probs"), "probs")); }

Json critics_to_json(const std::vector<CriticParams>& critics) {
  Json a = Json::array();
  for (size_t k = 0; k < critics.size(); ++k)
    a.push_back({{"k", k + 1}, {"w", vector_to_json(critics[k].w)}, {"theta", vector_to_json(critics[k].theta)}});
  return a;
}

void write_dataset_jsonl(const std::string& path, const TrajectoryDataset& data) {
  std::ofstream f = open_out(path);
  Json header{{"n_E", data.n_e()},       {"H", data.horizon},          {"gamma", data.gamma},
              {"seed", data.seed},       {"n_states", data.n_states}, {"n_actions", data.n_actions}};
  f << header.dump() << '\n';
  for (const auto& t : data.trajectories) f << Json{{"states", t.states}, {"actions", t.actions}}.dump() << '\n';
}

TrajectoryDataset read_dataset_jsonl(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path);
  std::string line;
  if (!std::getline(f, line)) throw ConfigError(path + ": empty dataset file");
  TrajectoryDataset d;
  try {
    const Json h = Json::parse(line);
    d.horizon = require(h, "H").get<int>();
    d.gamma = require(h, "gamma").get<double>();
    d.seed = h.value("seed", std::uint64_t{0});
    d.n_states = require(h, "n_states").get<int>();
    d.n_actions = require(h, "n_actions").get<int>();
    const int n_e = require(h, "n_E").get<int>();
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      const Json t = Json::parse(line);
      Trajectory tr{require(t, "states").get<std::vector<int>>(), require(t, "actions").get<std::vector<int>>()};
      if (static_cast<int>(tr.states.size()) != d.horizon + 1 || tr.actions.size() != tr.states.size())
        throw ConfigError(path + ": trajectory length does not match H+1");
      for (size_t i = 0; i < tr.states.size(); ++i)
        if (tr.states[i] < 0 || tr.states[i] >= d.n_states || tr.actions[i] < 0 || tr.actions[i] >= d.n_actions)
          throw ConfigError(path + ": index out of range");
      d.trajectories.push_back(std::move(tr));
    }
    if (d.n_e() != n_e) throw ConfigError(path + ": header n_E does not match the trajectory count");
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return d;
}

Json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path);
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream f = open_out(path);
  f << j.dump(2) << '\n';
}

void write_run_csv(const std::string& path, const std::vector<IterationLog>& log) {
  std::ofstream f = open_out(path);
  f << "k,G_value,grad_norm,d_C_hat,true_return,normalized_return,wallclock_ms\n";
  for (const auto& r : log)
    f << r.k << ',' << format_double(r.g_value) << ',' << format_double(r.grad_norm) << ','
      << format_double(r.d_c_hat) << ',' << format_double(r.true_return) << ','
      << format_double(r.normalized_return) << ',' << format_double(r.wallclock_ms) << '\n';
}

void write_sgd_diagnostics_csv(const std::string& path, const std::vector<SgdDiagnostics>& diag) {
  std::ofstream f = open_out(path);
  f << "t,n_t,beta_t,G_gap_if_oracle,grad_norm_hat\n";
  for (const auto& d : diag)
    f << d.t << ',' << d.n_t << ',' << format_double(d.beta_t) << ',' << format_double(d.g_gap) << ','
      << format_double(d.grad_norm_hat) << '\n';
}

}  // namespace ppil::io
