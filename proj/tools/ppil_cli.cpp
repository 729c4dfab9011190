#include "commands.hpp"

#include "ppil/common.hpp"
#include "ppil/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

using ppil::cli::Json;
using ppil::cli::Settings;

// Flag name -> settings key.
using FlagTable = std::vector<std::pair<std::string, std::string>>;

const FlagTable kDataFlags{{"n-trajs", "n_trajs"}, {"horizon", "horizon"}, {"soft", "soft_alpha"},
                           {"expert-data", "expert_data"}};

struct Command {
  std::string name;
  std::string help;
  FlagTable flags;
  std::function<int(const Settings&)> run;
};

std::vector<Command> commands() {
  FlagTable online = kDataFlags;
  online.insert(online.end(), {{"eta", "eta"},
                               {"alpha", "alpha"},
                               {"K", "K"},
                               {"critic", "critic"},
                               {"w-kind", "w_kind"},
                               {"theta-radius", "theta_radius"},
                               {"T", "T"},
                               {"n0", "n0"},
                               {"n-cap", "n_cap"},
                               {"minibatch", "minibatch"},
                               {"beta0", "beta0"},
                               {"chi", "chi"},
                               {"tail-fraction", "tail_fraction"},
                               {"draw-mode", "draw_mode"},
                               {"reuse-buffer", "reuse_buffer"}});
  FlagTable md = kDataFlags;
  md.insert(md.end(), {{"eta", "eta"},
                       {"alpha", "alpha"},
                       {"K", "K"},
                       {"md-beta", "md_beta"},
                       {"w-kind", "w_kind"},
                       {"theta-radius", "theta_radius"}});
  FlagTable gen = kDataFlags;
  gen.emplace_back("cost-file", "cost_file");
  return {
      {"gen-expert", "sample expert demonstrations as JSONL", gen, ppil::cli::gen_expert},
      {"run-online", "proximal point learner with exact or sampled critic", online, ppil::cli::run_online},
      {"run-offline", "single offline critic/actor step on expert transitions",
       {{"eta", "eta"},
        {"alpha", "alpha"},
        {"expert-data", "expert_data"},
        {"n-transitions", "n_transitions"},
        {"nu0-mode", "nu0_mode"},
        {"w-kind", "w_kind"},
        {"theta-radius", "theta_radius"}},
       ppil::cli::run_offline},
      {"run-md", "mirror-descent cost baseline", md, ppil::cli::run_md},
      {"eval-cost", "plan with a recovered cost and score it under the true cost", {{"cost-file", "cost_file"}},
       ppil::cli::eval_cost},
      {"transfer", "recovered cost in a dynamics-shifted MDP",
       {{"cost-file", "cost_file"}, {"swap-actions", "swap_actions"}, {"policy", "policy_file"}},
       ppil::cli::transfer},
      {"lp-check", "LP oracles and optimality certificates", {{"w-file", "w_file"}, {"v-file", "v_file"}},
       ppil::cli::lp_check},
      {"compare", "paired PPM and MD curves over environments and seeds",
       {{"envs", "envs"}, {"seeds", "seeds"}, {"K", "K"}},
       ppil::cli::compare},
      {"verify", "randomized property suite", {}, ppil::cli::verify},
  };
}

// Converts a flag string to the JSON type of the preset it overrides.
Json typed(const std::string& key, const std::string& text, const Json& preset) {
  try {
    if (preset.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ppil::ConfigError(key + " must be true or false");
    }
    std::size_t used = 0;
    if (preset.is_number_integer()) {
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw ppil::ConfigError(key + " must be an integer");
      return v;
    }
    if (preset.is_number() || preset.is_null()) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw ppil::ConfigError(key + " must be a number");
      return v;
    }
  } catch (const std::logic_error&) {
    throw ppil::ConfigError("bad value for " + key + ": " + text);
  }
  return text;
}

Settings resolve(const Command& cmd, const std::string& env_flag, const std::string& config_path,
                 const std::map<std::string, std::string>& given, const std::vector<std::string>& env_params,
                 long long seed, bool seed_given) {
  Json file = Json::object();
  if (!config_path.empty()) {
    file = ppil::io::read_json_file(config_path);
    if (!file.is_object()) throw ppil::ConfigError("config file must hold a JSON object");
  }
  std::string env = env_flag;
  if (env.empty() && file.contains("env")) env = file["env"].get<std::string>();
  if (env.empty() && cmd.name != "verify" && cmd.name != "compare") throw ppil::ConfigError("--env is required");

  Settings s;
  s.values = ppil::cli::presets(cmd.name, env);
  for (const auto& [k, v] : file.items()) {
    if (!s.values.contains(k)) throw ppil::ConfigError("unknown config key: " + k);
    if (k == "env_params") {
      s.values[k].update(v);
    } else {
      s.values[k] = v;
    }
  }
  s.values["env"] = env;
  if (seed_given) s.values["seed"] = seed;
  for (const auto& [key, text] : given) s.values[key] = typed(key, text, s.values[key]);
  for (const auto& kv : env_params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ppil::ConfigError("--env-param expects key=value: " + kv);
    s.values["env_params"][kv.substr(0, eq)] = typed(kv, kv.substr(eq + 1), Json(0.0));
  }
  return s;
}

void write_diagnostics(const std::string& out, const std::string& command, const Json& settings,
                       const ppil::NumericalError& e) {
  std::filesystem::path dir = out.empty() ? std::filesystem::current_path() : std::filesystem::path(out);
  // gen-expert takes a file path for --out
  if (command == "gen-expert") dir = dir.has_parent_path() ? dir.parent_path() : std::filesystem::current_path();
  std::filesystem::create_directories(dir);
  const Json diag{{"message", e.what()}, {"residual", e.residual()}, {"command", command}, {"settings", settings}};
  ppil::io::write_json_file((dir / "diagnostics.json").string(), diag);
  std::cerr << "diagnostics written to " << (dir / "diagnostics.json").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximal point imitation learning on tabular MDPs"};
  app.require_subcommand(1);

  struct Parsed {
    std::string env, config, out;
    long long seed = 0;
    bool zero_wallclock = false;
    std::vector<std::string> env_params;
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> opts;
    CLI::Option* seed_opt = nullptr;
  };
  const auto cmds = commands();
  std::vector<Parsed> parsed(cmds.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    auto* sub = app.add_subcommand(cmds[i].name, cmds[i].help);
    auto& p = parsed[i];
    sub->add_option("--env", p.env, "environment name");
    sub->add_option("--config", p.config, "JSON settings file")->check(CLI::ExistingFile);
    sub->add_option("--out", p.out, cmds[i].name == "gen-expert" ? "output JSONL file" : "output directory");
    p.seed_opt = sub->add_option("--seed", p.seed, "random seed");
    sub->add_option("--env-param", p.env_params, "environment parameter override key=value");
    sub->add_flag("--zero-wallclock", p.zero_wallclock, "write 0 for wallclock columns");
    const Json defaults = ppil::cli::presets(cmds[i].name, "");
    for (const auto& [flag, key] : cmds[i].flags) {
      // --cost is a short alias of --cost-file
      const std::string names = flag == "cost-file" ? "--cost,--cost-file" : "--" + flag;
      p.opts[key] = defaults[key].is_boolean() ? sub->add_flag(names + ",!--no-" + flag, p.raw[key])
                                               : sub->add_option(names, p.raw[key]);
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::size_t i = 0;
  while (!subs[i]->parsed()) ++i;
  const Command& cmd = cmds[i];
  Parsed& p = parsed[i];
  Settings s;
  try {
    std::map<std::string, std::string> given;
    for (const auto& [key, opt] : p.opts)
      if (opt->count() > 0) given[key] = p.raw[key];
    s = resolve(cmd, p.env, p.config, given, p.env_params, p.seed, p.seed_opt->count() > 0);
    s.out = p.out;
    s.zero_wallclock = p.zero_wallclock;
    return cmd.run(s);
  } catch (const ppil::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ppil::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << " (residual " << e.residual() << ")\n";
    write_diagnostics(p.out, cmd.name, s.values, e);
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
