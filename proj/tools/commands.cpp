#include "commands.hpp"

#include "ppil/baselines.hpp"
#include "ppil/experiment.hpp"
#include "ppil/io.hpp"
#include "ppil/lp.hpp"
#include "ppil/offline.hpp"
#include "ppil/properties.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <iostream>

namespace ppil::cli {

namespace {

namespace fs = std::filesystem;

const Json& need(const Settings& s, const char* key) {
  if (!s.values.contains(key) || s.values[key].is_null()) throw ConfigError(std::string("missing setting: ") + key);
  return s.values[key];
}

std::string str(const Settings& s, const char* key) {
  const Json& j = need(s, key);
  if (!j.is_string()) throw ConfigError(std::string(key) + " must be a string");
  return j.get<std::string>();
}

double num(const Settings& s, const char* key) {
  const Json& j = need(s, key);
  if (!j.is_number()) throw ConfigError(std::string(key) + " must be a number");
  return j.get<double>();
}

int integer(const Settings& s, const char* key) {
  const Json& j = need(s, key);
  if (!j.is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
  return j.get<int>();
}

bool flag(const Settings& s, const char* key) {
  const Json& j = need(s, key);
  if (!j.is_boolean()) throw ConfigError(std::string(key) + " must be true or false");
  return j.get<bool>();
}

EnvParams env_params(const Settings& s) {
  EnvParams p;
  if (!s.values.contains("env_params")) return p;
  const Json& j = s.values["env_params"];
  if (!j.is_object()) throw ConfigError("env_params must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw ConfigError("env_params." + k + " must be a number");
    p[k] = v.get<double>();
  }
  return p;
}

WKind w_kind(const Settings& s) {
  const std::string k = str(s, "w_kind");
  if (k == "simplex") return WKind::kSimplex;
  if (k == "ball") return WKind::kBall;
  throw ConfigError("w_kind must be simplex or ball");
}

ExpertKind expert_kind(const Settings& s) {
  const double a = num(s, "soft_alpha");
  if (a < 0.0) throw ConfigError("soft_alpha must be nonnegative");
  return a > 0.0 ? ExpertKind::soft(a) : ExpertKind::greedy();
}

std::optional<double> optional_num(const Settings& s, const char* key) {
  if (!s.values.contains(key) || s.values[key].is_null()) return std::nullopt;
  return num(s, key);
}

fs::path out_dir(const Settings& s) {
  if (s.out.empty()) throw ConfigError("--out is required");
  fs::create_directories(s.out);
  return fs::path(s.out);
}

void write_config(const Settings& s, const fs::path& dir) { io::write_json_file((dir / "config.json").string(), s.values); }

Trial load_trial(const Settings& s) {
  const std::string env = str(s, "env");
  const std::string data = s.values.value("expert_data", std::string());
  if (!data.empty()) return make_trial(env, env_params(s), io::read_dataset_jsonl(data), expert_kind(s));
  return make_trial(env, env_params(s), static_cast<std::uint64_t>(integer(s, "seed")), integer(s, "n_trajs"),
                    integer(s, "horizon"), expert_kind(s));
}

// A cost file holds {"w": [...]} (length m), {"c": [...]} (length S·A), or a bare array of either length.
Vector read_cost(const Settings& s, const Env& env) {
  const std::string path = str(s, "cost_file");
  if (path.empty()) throw ConfigError("--cost is required");
  const Json j = io::read_json_file(path);
  Vector v;
  bool is_w = false;
  if (j.is_array()) {
    v = io::vector_from_json(j, "cost");
    is_w = v.size() == env.features.m() && v.size() != env.mdp.n_pairs();
  } else if (j.contains("c")) {
    v = io::vector_from_json(j["c"], "c");
  } else if (j.contains("w")) {
    v = io::vector_from_json(j["w"], "w");
    is_w = true;
  } else {
    throw ConfigError("cost file needs a \"w\" or \"c\" entry");
  }
  if (is_w) {
    if (v.size() != env.features.m()) throw ConfigError("cost file: w must have length m");
    return env.features.phi() * v;
  }
  if (v.size() != env.mdp.n_pairs()) throw ConfigError("cost file: c must have length S*A");
  return v;
}

Json value_grid(const Env& env, const Vector& v) {
  if (env.grid_rows == 0) return io::vector_to_json(v);
  Json rows = Json::array();
  for (int r = 0; r < env.grid_rows; ++r) {
    Json row = Json::array();
    for (int c = 0; c < env.grid_cols; ++c) row.push_back(v(r * env.grid_cols + c));
    rows.push_back(row);
  }
  return rows;
}

void write_run(const Settings& s, const Trial& tr, RunResult& run, WKind kind, double wallclock_ms) {
  const fs::path dir = out_dir(s);
  write_config(s, dir);
  if (s.zero_wallclock) {
    for (auto& l : run.log) l.wallclock_ms = 0.0;
    wallclock_ms = 0.0;
  }
  io::write_run_csv((dir / "run.csv").string(), run.log);
  const RunSummary last = summarize(tr, run, kind);
  const auto& mdp = tr.env.mdp;
  const double mix_return = policy_return(mdp, run.mixed_policy);
  const Vector rho = fev(tr.env.features, tr.expert_mu);
  const Json summary{{"final_return", last.final_return},
                     {"normalized_return", last.normalized_return},
                     {"d_C", last.d_c},
                     {"wallclock", wallclock_ms},
                     {"mixture",
                      {{"final_return", mix_return},
                       {"normalized_return", tr.scale.normalize(mix_return)},
                       {"d_C", c_distance(mdp, run.mixed_policy, rho, tr.env.features, kind)}}},
                     {"K", static_cast<int>(run.log.size())},
                     {"theta_radius", run.theta_radius}};
  io::write_json_file((dir / "summary.json").string(), summary);
  io::write_json_file((dir / "policy.json").string(), io::policy_to_json(run.last_policy()));
  io::write_json_file((dir / "mixture_policy.json").string(), io::policy_to_json(run.mixed_policy));
  io::write_json_file((dir / "critics.json").string(), io::critics_to_json(run.critics));
  if (!run.critics.empty())
    io::write_json_file((dir / "cost.json").string(),
                        {{"w", io::vector_to_json(run.average_w)},
                         {"c", io::vector_to_json(tr.env.features.phi() * run.average_w)},
                         {"theta", io::vector_to_json(run.average_theta)}});
  std::cout << summary.dump(2) << "\n";
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

PpmConfig ppm_config(const Settings& s, const Trial& tr) {
  PpmConfig c;
  c.eta = num(s, "eta");
  c.alpha = num(s, "alpha");
  c.K = integer(s, "K");
  const std::string critic = str(s, "critic");
  if (critic == "exact") {
    c.critic = CriticKind::kExact;
  } else if (critic == "bsge") {
    c.critic = CriticKind::kBsge;
  } else {
    throw ConfigError("critic must be exact or bsge");
  }
  c.w_kind = w_kind(s);
  c.theta_radius = optional_num(s, "theta_radius");
  c.beta_hat = tr.beta_hat;
  c.sgd.T = integer(s, "T");
  c.sgd.n0 = integer(s, "n0");
  c.sgd.n_cap = integer(s, "n_cap");
  c.sgd.minibatch = integer(s, "minibatch");
  c.sgd.beta0 = num(s, "beta0");
  c.sgd.chi = num(s, "chi");
  c.sgd.tail_fraction = num(s, "tail_fraction");
  const std::string draw = str(s, "draw_mode");
  if (draw == "geometric") {
    c.sgd.draw_mode = DrawMode::kGeometric;
  } else if (draw == "episodic") {
    c.sgd.draw_mode = DrawMode::kEpisodic;
    c.sgd.episodic_horizon = integer(s, "horizon");
  } else {
    throw ConfigError("draw_mode must be geometric or episodic");
  }
  c.sgd.reuse_buffer = flag(s, "reuse_buffer");
  return c;
}

}  // namespace

Json presets(const std::string& command, const std::string& env) {
  Json j{{"env", env}, {"env_params", Json::object()}, {"seed", 0}};
  EnvPreset p;
  if (!env.empty()) p = env_preset(env);
  const Json data{{"n_trajs", p.n_trajs}, {"horizon", p.horizon}, {"soft_alpha", 0.0}, {"expert_data", ""}};
  if (command == "gen-expert") {
    j.update(data);
    j["cost_file"] = "";
  } else if (command == "run-online") {
    j.update(data);
    j.update({{"eta", p.eta},       {"alpha", p.alpha},       {"K", 50},         {"critic", "exact"},
              {"w_kind", "simplex"}, {"theta_radius", nullptr}, {"T", 1000},       {"n0", 10},
              {"n_cap", 0},          {"minibatch", 1},          {"beta0", 0.0},    {"chi", 0.0},
              {"tail_fraction", 1.0}, {"draw_mode", "geometric"}, {"reuse_buffer", false}});
  } else if (command == "run-md") {
    j.update(data);
    j.update({{"eta", p.eta}, {"alpha", p.alpha}, {"K", 50}, {"md_beta", p.md_beta}, {"w_kind", "simplex"},
              {"theta_radius", nullptr}});
  } else if (command == "run-offline") {
    j.update({{"eta", p.eta}, {"alpha", p.alpha}, {"expert_data", ""}, {"n_transitions", 1000},
              {"nu0_mode", "expert_flow"}, {"w_kind", "simplex"}, {"theta_radius", nullptr}});
  } else if (command == "eval-cost") {
    j["cost_file"] = "";
  } else if (command == "transfer") {
    j.update({{"cost_file", ""}, {"swap_actions", true}, {"policy_file", ""}});
  } else if (command == "lp-check") {
    j.update({{"w_file", ""}, {"v_file", ""}});
  } else if (command == "compare") {
    j.update({{"envs", ""}, {"seeds", 3}, {"K", 50}});
  }
  return j;
}

int gen_expert(const Settings& s) {
  const Env env = make_env(str(s, "env"), env_params(s));
  const Vector cost = str(s, "cost_file").empty() ? env.mdp.true_cost() : read_cost(s, env);
  const Policy expert = generate_expert(env.mdp, cost, expert_kind(s));
  const TrajectoryDataset data = sample_trajectories(env.mdp, expert, integer(s, "n_trajs"), integer(s, "horizon"),
                                                     static_cast<std::uint64_t>(integer(s, "seed")));
  if (s.out.empty()) throw ConfigError("--out is required");
  const fs::path out(s.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  io::write_dataset_jsonl(out.string(), data);
  io::write_json_file(out.string() + ".config.json", s.values);
  const Json summary{{"n_E", data.n_e()},
                     {"horizon", data.horizon},
                     {"expert_return", policy_return(env.mdp, expert)},
                     {"fev", io::vector_to_json(empirical_fev(data, env.features))}};
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int run_online(const Settings& s) {
  const Trial tr = load_trial(s);
  const PpmConfig cfg = ppm_config(s, tr);
  const auto t0 = std::chrono::steady_clock::now();
  RunResult run = ppil::run_online(tr, cfg, static_cast<std::uint64_t>(integer(s, "seed")));
  write_run(s, tr, run, cfg.w_kind, ms_since(t0));
  return 0;
}

int run_md(const Settings& s) {
  const Trial tr = load_trial(s);
  MdConfig cfg;
  cfg.eta = num(s, "eta");
  cfg.alpha = num(s, "alpha");
  cfg.K = integer(s, "K");
  cfg.beta = num(s, "md_beta");
  cfg.w_kind = w_kind(s);
  cfg.theta_radius = optional_num(s, "theta_radius");
  const auto t0 = std::chrono::steady_clock::now();
  RunResult run = ppil::run_md(tr, cfg);
  write_run(s, tr, run, cfg.w_kind, ms_since(t0));
  return 0;
}

int run_offline(const Settings& s) {
  const std::string env_name = str(s, "env");
  const Env env = make_env(env_name, env_params(s));
  const Policy expert = generate_expert(env.mdp, env.mdp.true_cost(), ExpertKind::greedy());
  const std::string data = str(s, "expert_data");
  OfflineBatch batch;
  if (!data.empty()) {
    batch = offline_batch_from_dataset(io::read_dataset_jsonl(data), env.features);
  } else {
    const TransitionBuffer buf =
        sample_occupancy_buffer(env.mdp, expert, integer(s, "n_transitions"), DrawMode::kGeometric,
                                derive_seed(static_cast<std::uint64_t>(integer(s, "seed")), 1));
    batch = offline_batch_from_buffer(buf, env.features, env.mdp.n_states());
  }
  OfflineConfig cfg;
  cfg.eta = num(s, "eta");
  cfg.alpha = num(s, "alpha");
  cfg.w_kind = w_kind(s);
  cfg.theta_radius = optional_num(s, "theta_radius");
  const std::string mode = str(s, "nu0_mode");
  if (mode == "expert_flow") {
    cfg.nu0_mode = Nu0Mode::kExpertFlow;
  } else if (mode == "known") {
    cfg.nu0_mode = Nu0Mode::kKnownNu0;
  } else {
    throw ConfigError("nu0_mode must be expert_flow or known");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const OfflineResult r = op2il_run(env.features, env.mdp.init_dist(), env.mdp.gamma(), batch, cfg);
  const double ms = s.zero_wallclock ? 0.0 : ms_since(t0);

  const fs::path dir = out_dir(s);
  write_config(s, dir);
  const ReturnScale scale = make_return_scale(env.mdp, expert);
  const double ret = policy_return(env.mdp, r.policy);
  IterationLog log;
  log.k = 1;
  log.g_value = r.value;
  log.grad_norm = r.grad_norm;
  log.d_c_hat = c_distance(env.mdp, r.policy, batch.expert_fev_hat, env.features, cfg.w_kind);
  log.true_return = ret;
  log.normalized_return = scale.normalize(ret);
  log.wallclock_ms = ms;
  log.critic_converged = r.converged;
  io::write_run_csv((dir / "run.csv").string(), {log});
  const Json summary{
      {"final_return", ret},
      {"normalized_return", log.normalized_return},
      {"d_C", c_distance(env.mdp, r.policy, fev(env.features, occupancy_measure(env.mdp, expert).mu()), env.features,
                         cfg.w_kind)},
      {"wallclock", ms},
      {"n_samples", batch.size()},
      {"critic_converged", r.converged},
      {"alpha_theory", r.alpha_theory}};
  io::write_json_file((dir / "summary.json").string(), summary);
  io::write_json_file((dir / "policy.json").string(), io::policy_to_json(r.policy));
  io::write_json_file((dir / "cost.json").string(),
                      {{"w", io::vector_to_json(r.params.w)},
                       {"c", io::vector_to_json(env.features.phi() * r.params.w)},
                       {"theta", io::vector_to_json(r.params.theta)}});
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int eval_cost(const Settings& s) {
  const Env env = make_env(str(s, "env"), env_params(s));
  const Vector c = read_cost(s, env);
  const Policy expert = generate_expert(env.mdp, env.mdp.true_cost(), ExpertKind::greedy());
  const RecoveredCostReport r = recovered_cost_eval(env.mdp, c, expert);
  const Json report{{"true_cost", r.true_cost},
                    {"true_return", r.true_return},
                    {"normalized_return", r.normalized_return},
                    {"greedy_policy", io::policy_to_json(r.greedy)},
                    {"v_recovered", value_grid(env, r.v_recovered)},
                    {"v_true", value_grid(env, r.v_true)}};
  if (!s.out.empty()) {
    const fs::path dir = out_dir(s);
    write_config(s, dir);
    io::write_json_file((dir / "eval_cost.json").string(), report);
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

int transfer(const Settings& s) {
  const Env env = make_env(str(s, "env"), env_params(s));
  const Vector c = read_cost(s, env);
  TabularMdp target = env.mdp;
  if (flag(s, "swap_actions")) {
    if (env.name != "WindyGrid") throw ConfigError("swap_actions needs the WindyGrid action layout");
    target = permute_actions(env.mdp, windy_swap_permutation());
  }
  const std::string pf = str(s, "policy_file");
  const bool has_policy = !pf.empty();
  const Policy learned = has_policy ? io::policy_from_json(io::read_json_file(pf))
                                    : Policy::uniform(env.mdp.n_states(), env.mdp.n_actions());
  const TransferReport r = transfer_eval(env.mdp, target, c, learned);
  Json report{{"optimal_target", r.optimal_target},
              {"expert_source", r.expert_source},
              {"recovered_target", r.recovered_target}};
  if (has_policy) report["learned"] = r.learned;
  if (!s.out.empty()) {
    const fs::path dir = out_dir(s);
    write_config(s, dir);
    io::write_json_file((dir / "transfer.json").string(), report);
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

int lp_check(const Settings& s) {
  const Env env = make_env(str(s, "env"), env_params(s));
  const auto& mdp = env.mdp;
  const Vector c = mdp.true_cost();
  const auto vi = value_iteration(mdp, c, 1e-12);
  const QLpResult q = forward_q_lp(mdp, c);
  const PrimalQLpResult p = primal_q_lp(mdp, c);
  const Policy expert = generate_expert(mdp, c, ExpertKind::greedy());
  const Vector mu_e = occupancy_measure(mdp, expert).mu();
  const IlPrimalResult il = il_primal_lp(mdp, env.features, mu_e);
  Json report{{"forward_q_lp", q.value},
              {"primal_q_lp", p.value},
              {"value_iteration", (1.0 - mdp.gamma()) * mdp.init_dist().dot(vi.v)},
              {"il_primal_zeta", il.zeta}};
  const std::string wf = str(s, "w_file"), vf = str(s, "v_file");
  if (!wf.empty()) {
    const Json wj = io::read_json_file(wf);
    const Vector w = io::vector_from_json(wj.is_object() ? wj.at("w") : wj, "w");
    if (w.size() != env.features.m()) throw ConfigError("w must have length m");
    Vector v;
    if (!vf.empty()) {
      const Json vj = io::read_json_file(vf);
      v = io::vector_from_json(vj.is_object() ? vj.at("v") : vj, "v");
    } else {
      v = value_iteration(mdp, env.features.phi() * w, 1e-12).v;
    }
    const Certificate cert = eps_certificate(mdp, env.features, w, v, mu_e);
    report["certificate"] = {{"eps1", cert.eps1}, {"eps2", cert.eps2}, {"v_source", vf.empty() ? "optimal" : "file"}};
  }
  std::cout << report.dump(2) << "\n";
  if (!s.out.empty()) {
    const fs::path dir = out_dir(s);
    write_config(s, dir);
    io::write_json_file((dir / "lp_check.json").string(), report);
  }
  return 0;
}

int verify(const Settings& s) {
  const auto results = run_property_suite(static_cast<std::uint64_t>(integer(s, "seed")));
  int failed = 0;
  Json rows = Json::array();
  for (const auto& r : results) {
    std::printf("%-4s %-10s %-55s %s\n", r.passed ? "PASS" : "FAIL", r.module.c_str(), r.name.c_str(),
                r.detail.c_str());
    failed += !r.passed;
    rows.push_back({{"module", r.module}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  }
  std::printf("%d/%zu properties pass\n", static_cast<int>(results.size()) - failed, results.size());
  if (!s.out.empty()) {
    const fs::path dir = out_dir(s);
    write_config(s, dir);
    io::write_json_file((dir / "verify.json").string(), rows);
  }
  if (failed > 0) throw NumericalError(std::to_string(failed) + " properties failed", failed);
  return 0;
}

int compare(const Settings& s) {
  std::vector<std::string> envs;
  std::stringstream list(str(s, "envs"));
  for (std::string e; std::getline(list, e, ',');)
    if (!e.empty()) envs.push_back(e);
  if (envs.empty()) envs = env_names();
  const int seeds = integer(s, "seeds");
  const int K = integer(s, "K");
  if (seeds < 1 || K < 1) throw ConfigError("seeds and K must be positive");
  for (const auto& e : envs) make_env(e);  // fail on bad names before any work
  const fs::path dir = out_dir(s);
  write_config(s, dir);

  struct Cell {
    std::string env;
    int seed;
    double ppm, md;
  };
  // Each (env, seed) writes its own directory; no state is shared between tasks.
  auto one = [&](const std::string& env, int seed) {
    const Trial tr = make_trial(env, {}, static_cast<std::uint64_t>(seed));
    const EnvPreset p = env_preset(env);
    PpmConfig pc;
    pc.eta = p.eta;
    pc.alpha = p.alpha;
    pc.K = K;
    const RunResult ppm = ppil::run_online(tr, pc, static_cast<std::uint64_t>(seed));
    MdConfig mc;
    mc.eta = p.eta;
    mc.alpha = p.alpha;
    mc.beta = p.md_beta;
    mc.K = K;
    const RunResult md = ppil::run_md(tr, mc);
    const fs::path run_dir = dir / env / ("seed" + std::to_string(seed));
    fs::create_directories(run_dir);
    std::ofstream f(run_dir / "curves.csv");
    f << "k,ppm_normalized_return,md_normalized_return,ppm_d_C_hat,md_d_C_hat\n";
    for (int k = 0; k < K; ++k)
      f << k + 1 << ',' << io::format_double(ppm.log[k].normalized_return) << ','
        << io::format_double(md.log[k].normalized_return) << ',' << io::format_double(ppm.log[k].d_c_hat) << ','
        << io::format_double(md.log[k].d_c_hat) << '\n';
    if (!f) throw ConfigError("cannot write " + (run_dir / "curves.csv").string());
    return Cell{env, seed, ppm.log.back().normalized_return, md.log.back().normalized_return};
  };
  std::vector<std::future<Cell>> jobs;
  for (const auto& e : envs)
    for (int seed = 0; seed < seeds; ++seed) jobs.push_back(std::async(std::launch::async, one, e, seed));
  std::vector<Cell> cells;
  for (auto& j : jobs) cells.push_back(j.get());

  Json summary = Json::object();
  for (const auto& e : envs) {
    std::vector<double> ppm, md;
    for (const auto& c : cells)
      if (c.env == e) {
        ppm.push_back(c.ppm);
        md.push_back(c.md);
      }
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    summary[e] = {{"ppm_median_normalized_return", median(ppm)}, {"md_median_normalized_return", median(md)}};
    std::printf("%-20s ppm %.3f  md %.3f\n", e.c_str(), median(ppm), median(md));
  }
  io::write_json_file((dir / "summary.json").string(), summary);
  return 0;
}

}  // namespace ppil::cli
