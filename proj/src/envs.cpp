#include "ppil/envs.hpp"

#include "ppil/rng.hpp"

#include <algorithm>
#include <cmath>

namespace ppil {

namespace {

struct Builder {
  int S, A;
  Matrix p;
  Vector cost;
  Builder(int s, int a) : S(s), A(a), p(Matrix::Zero(s * a, s)), cost(Vector::Zero(s * a)) {}
  void add(int s, int a, int next, double prob) { p(s * A + a, next) += prob; }
  void set_cost(int s, int a, double c) { cost(s * A + a) = c; }
  // merged_state >= 0: that state's actions share one feature column.
  Env build(const std::string& name, Vector nu0, double gamma, int merged_state = -1) {
    TabularMdp mdp(S, A, p, std::move(nu0), cost, gamma);
    if (merged_state < 0) {
      FeatureMap f = tabular_features(mdp);
      return Env{name, std::move(mdp), std::move(f), 0, 0};
    }
    const int m = S * A - A + 1;
    Matrix phi = Matrix::Zero(S * A, m), fm(m, S);
    for (int i = 0; i < S * A; ++i) {
      const bool merged = i / A == merged_state;
      const int j = merged ? merged_state * A : (i / A > merged_state ? i - A + 1 : i);
      phi(i, j) = 1.0;
      fm.row(j) = p.row(i);
    }
    FeatureMap f(std::move(phi), std::move(fm));
    return Env{name, std::move(mdp), std::move(f), 0, 0};
  }
};

Vector point_mass(int n, int i) {
  Vector v = Vector::Zero(n);
  v(i) = 1.0;
  return v;
}

double get(const EnvParams& p, const char* key) { return p.at(key); }

int get_int(const EnvParams& p, const char* key, int lo) {
  const double v = p.at(key);
  if (v != std::floor(v) || v < lo)
    throw ConfigError(std::string("env parameter '") + key + "' must be an integer >= " + std::to_string(lo));
  return static_cast<int>(v);
}

double get_prob(const EnvParams& p, const char* key) {
  const double v = p.at(key);
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("env parameter '") + key + "' must be in [0,1]");
  return v;
}

Env two_state(const EnvParams& p, bool stochastic) {
  const double flip = stochastic ? get_prob(p, "flip") : 0.0;
  Builder b(2, 2);  // 0 stay, 1 switch
  for (int s = 0; s < 2; ++s) {
    b.add(s, 0, s, 1.0 - flip);
    b.add(s, 0, 1 - s, flip);
    b.add(s, 1, 1 - s, 1.0 - flip);
    b.add(s, 1, s, flip);
  }
  b.set_cost(0, 0, 1.0);
  b.set_cost(0, 1, 1.0);
  return b.build(stochastic ? "TwoStateStochastic" : "TwoStateDet", point_mass(2, 0), get(p, "gamma"));
}

Env wide_tree(const EnvParams& p) {
  // Root 0, children 1..3, leaves 4..12; every leaf action returns to the root.
  Builder b(13, 3);
  for (int a = 0; a < 3; ++a) {
    b.add(0, a, 1 + a, 1.0);
    for (int c = 0; c < 3; ++c) b.add(1 + c, a, 4 + 3 * c + a, 1.0);
    for (int l = 4; l < 13; ++l) b.add(l, a, 0, 1.0);
  }
  const int good = 4 + 3 * 2 + 1;
  for (int l = 4; l < 13; ++l)
    for (int a = 0; a < 3; ++a) b.set_cost(l, a, l == good ? 0.0 : 1.0);
  return b.build("WideTree", point_mass(13, 0), get(p, "gamma"));
}

Env river_swim(const EnvParams& p) {
  const int n = get_int(p, "n", 2);
  const double slip = get_prob(p, "slip");
  Builder b(n, 2);  // 0 left, 1 right
  for (int s = 0; s < n; ++s) {
    b.add(s, 0, std::max(s - 1, 0), 1.0);
    // Standard swim probabilities, blended with a deterministic right move.
    b.add(s, 1, std::min(s + 1, n - 1), 1.0 - slip);
    if (s == 0) {
      b.add(s, 1, 0, slip * 0.4);
      b.add(s, 1, 1, slip * 0.6);
    } else if (s == n - 1) {
      b.add(s, 1, s, slip * 0.6);
      b.add(s, 1, s - 1, slip * 0.4);
    } else {
      b.add(s, 1, s + 1, slip * 0.35);
      b.add(s, 1, s, slip * 0.6);
      b.add(s, 1, s - 1, slip * 0.05);
    }
    b.set_cost(s, 0, 1.0);
    b.set_cost(s, 1, 1.0);
  }
  b.set_cost(0, 0, 1.0 - 5.0 / 10000.0);
  b.set_cost(n - 1, 1, 0.0);
  Vector nu0 = Vector::Zero(n);
  if (n >= 3) {
    nu0(1) = 0.5;
    nu0(2) = 0.5;
  } else {
    nu0(0) = 1.0;
  }
  return b.build("RiverSwim", nu0, get(p, "gamma"));
}

Env single_chain(const EnvParams& p) {
  const int n = get_int(p, "n", 2);
  const double slip = get_prob(p, "slip");
  Builder b(n, 2);  // 0 forward, 1 return
  for (int s = 0; s < n; ++s) {
    const int fwd = std::min(s + 1, n - 1);
    const double r_fwd = s == n - 1 ? 10.0 : 0.0;
    const double r_ret = 2.0;
    b.add(s, 0, fwd, 1.0 - slip);
    b.add(s, 0, 0, slip);
    b.add(s, 1, 0, 1.0 - slip);
    b.add(s, 1, fwd, slip);
    b.set_cost(s, 0, 1.0 - ((1.0 - slip) * r_fwd + slip * r_ret) / 10.0);
    b.set_cost(s, 1, 1.0 - ((1.0 - slip) * r_ret + slip * r_fwd) / 10.0);
  }
  return b.build("SingleChain", point_mass(n, 0), get(p, "gamma"));
}

Env double_chain(const EnvParams& p) {
  const int len = get_int(p, "chain_length", 1);
  const double slip = get_prob(p, "slip");
  // State 0, chain A = 1..len, chain B = len+1..2len. Action 0 moves forward,
  // action 1 returns to 0; at state 0 the actions enter A and B.
  const int S = 1 + 2 * len;
  Builder b(S, 2);
  b.add(0, 0, 1, 1.0 - slip);
  b.add(0, 0, len + 1, slip);
  b.add(0, 1, len + 1, 1.0 - slip);
  b.add(0, 1, 1, slip);
  b.set_cost(0, 0, 1.0);
  b.set_cost(0, 1, 1.0);
  const double end_cost[2] = {0.0, get(p, "b_end_cost")};
  const double ret_cost = get(p, "return_cost");
  for (int c = 0; c < 2; ++c) {
    const int first = 1 + c * len;
    for (int i = 0; i < len; ++i) {
      const int s = first + i;
      const bool end = i == len - 1;
      b.add(s, 0, end ? s : s + 1, 1.0 - slip);
      b.add(s, 0, 0, slip);
      b.add(s, 1, 0, 1.0 - slip);
      b.add(s, 1, end ? s : s + 1, slip);
      const double c_fwd = end ? end_cost[c] : 1.0;
      b.set_cost(s, 0, (1.0 - slip) * c_fwd + slip * ret_cost);
      b.set_cost(s, 1, (1.0 - slip) * ret_cost + slip * c_fwd);
    }
  }
  return b.build("DoubleChain", point_mass(S, 0), get(p, "gamma"));
}

Env windy_grid(const EnvParams& p) {
  const int rows = get_int(p, "rows", 2), cols = get_int(p, "cols", 3);
  const double wind = get_prob(p, "wind_prob");
  const bool absorbing = get_prob(p, "absorbing_goal") >= 0.5;
  const int start = (rows / 2) * cols, goal = (rows / 2) * cols + cols - 1;
  Builder b(rows * cols, 4);  // 0 up, 1 down, 2 left, 3 right
  const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
  auto clamp_cell = [&](int r, int c) {
    return std::clamp(r, 0, rows - 1) * cols + std::clamp(c, 0, cols - 1);
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int s = r * cols + c;
      const bool windy = c > 0 && c < cols - 1;
      for (int a = 0; a < 4; ++a) {
        if (s == goal && absorbing) {  // all goal actions coincide; see build()
          b.add(s, a, s, 1.0);
          continue;
        }
        b.set_cost(s, a, s == goal ? 0.0 : 1.0);
        const int nr = r + dr[a], nc = c + dc[a];
        if (windy) {
          b.add(s, a, clamp_cell(nr - 1, nc), wind);
          b.add(s, a, clamp_cell(nr, nc), 1.0 - wind);
        } else {
          b.add(s, a, clamp_cell(nr, nc), 1.0);
        }
      }
    }
  Env e = b.build("WindyGrid", point_mass(rows * cols, start), get(p, "gamma"), absorbing ? goal : -1);
  e.grid_rows = rows;
  e.grid_cols = cols;
  return e;
}

}  // namespace

const std::vector<std::string>& env_names() {
  static const std::vector<std::string> names = {"TwoStateDet", "TwoStateStochastic", "WideTree", "RiverSwim",
                                                 "SingleChain", "DoubleChain",        "WindyGrid"};
  return names;
}

EnvParams env_defaults(const std::string& name) {
  if (name == "TwoStateDet") return {{"gamma", 0.9}};
  if (name == "TwoStateStochastic") return {{"gamma", 0.9}, {"flip", 0.2}};
  if (name == "WideTree") return {{"gamma", 0.9}};
  if (name == "RiverSwim") return {{"gamma", 0.95}, {"n", 6}, {"slip", 1.0}};
  if (name == "SingleChain") return {{"gamma", 0.9}, {"n", 5}, {"slip", 0.2}};
  if (name == "DoubleChain")
    return {{"gamma", 0.9}, {"chain_length", 4}, {"slip", 0.0}, {"b_end_cost", 0.4}, {"return_cost", 0.9}};
  if (name == "WindyGrid") return {{"gamma", 0.9}, {"rows", 5}, {"cols", 5}, {"wind_prob", 0.3}, {"absorbing_goal", 1.0}};
  throw ConfigError("unknown environment '" + name + "'");
}

Env make_env(const std::string& name, const EnvParams& params) {
  EnvParams p = env_defaults(name);
  for (const auto& [k, v] : params) {
    if (!p.count(k)) throw ConfigError("environment " + name + " has no parameter '" + k + "'");
    p[k] = v;
  }
  if (name == "TwoStateDet") return two_state(p, false);
  if (name == "TwoStateStochastic") return two_state(p, true);
  if (name == "WideTree") return wide_tree(p);
  if (name == "RiverSwim") return river_swim(p);
  if (name == "SingleChain") return single_chain(p);
  if (name == "DoubleChain") return double_chain(p);
  return windy_grid(p);
}

std::vector<int> windy_swap_permutation() { return {3, 2, 1, 0}; }

EnvPreset env_preset(const std::string& name) {
  env_defaults(name);  // validates the name
  EnvPreset p;
  if (name == "TwoStateDet" || name == "TwoStateStochastic" || name == "WideTree") p.n_trajs = 25;
  if (name == "SingleChain" || name == "DoubleChain") p.md_beta = 0.03;
  return p;
}

TabularMdp random_mdp(int n_states, int n_actions, double gamma, std::uint64_t seed) {
  if (n_states < 1 || n_actions < 1) throw ConfigError("random_mdp: sizes must be positive");
  Rng rng(seed);
  const int n = n_states * n_actions;
  Matrix p(n, n_states);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < n_states; ++s) p(i, s) = -std::log(1.0 - rng.uniform());
    p.row(i) /= p.row(i).sum();
  }
  Vector c(n);
  for (int i = 0; i < n; ++i) c(i) = rng.uniform();
  Vector nu0(n_states);
  for (int s = 0; s < n_states; ++s) nu0(s) = 0.1 + rng.uniform();
  nu0 /= nu0.sum();
  return TabularMdp(n_states, n_actions, p, nu0, c, gamma);
}

Env random_linear_mdp(int n_states, int n_actions, int m, double gamma, std::uint64_t seed) {
  if (m < 1) throw ConfigError("random_linear_mdp: m must be positive");
  Rng rng(seed);
  const int n = n_states * n_actions;
  auto simplex_rows = [&](int r, int c) {
    Matrix x(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) x(i, j) = -std::log(1.0 - rng.uniform());
      x.row(i) /= x.row(i).sum();
    }
    return x;
  };
  const Matrix phi = simplex_rows(n, m);
  const Matrix mm = simplex_rows(m, n_states);
  Matrix p = phi * mm;
  for (int i = 0; i < n; ++i) p.row(i) /= p.row(i).sum();
  Vector w(m);
  for (int j = 0; j < m; ++j) w(j) = rng.uniform();
  const Vector c = phi * w;
  Vector nu0(n_states);
  for (int s = 0; s < n_states; ++s) nu0(s) = 0.1 + rng.uniform();
  nu0 /= nu0.sum();
  TabularMdp mdp(n_states, n_actions, p, nu0, c, gamma);
  return Env{"RandomLinear", std::move(mdp), FeatureMap(phi, mm), 0, 0};
}

}  // namespace ppil
