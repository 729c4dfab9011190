#pragma once

#include <json.hpp>

#include <string>

namespace ppil::cli {

using Json = nlohmann::json;

/// Resolved settings of one command: presets, then the config file, then
/// flags given on the command line.
struct Settings {
  Json values = Json::object();
  std::string out;              // output directory ("" = none)
  bool zero_wallclock = false;  // write 0 for wallclock columns
};

/// Each command returns the process exit code. Library errors propagate.
int gen_expert(const Settings& s);
int run_online(const Settings& s);
int run_offline(const Settings& s);
int run_md(const Settings& s);
int eval_cost(const Settings& s);
int transfer(const Settings& s);
int lp_check(const Settings& s);
int verify(const Settings& s);
int compare(const Settings& s);

/// Built-in defaults of every key for `command` on `env`.
Json presets(const std::string& command, const std::string& env);

}  // namespace ppil::cli
