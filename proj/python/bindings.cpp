#include "ppil/baselines.hpp"
#include "ppil/experiment.hpp"
#include "ppil/lp.hpp"
#include "ppil/offline.hpp"
#include "ppil/properties.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ppil;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Proximal point imitation learning on tabular and linear MDPs";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::enum_<WKind>(m, "WKind").value("simplex", WKind::kSimplex).value("ball", WKind::kBall);
  py::enum_<CriticKind>(m, "CriticKind").value("exact", CriticKind::kExact).value("bsge", CriticKind::kBsge);
  py::enum_<DrawMode>(m, "DrawMode")
      .value("geometric", DrawMode::kGeometric)
      .value("episodic", DrawMode::kEpisodic);

  py::class_<TabularMdp>(m, "TabularMdp")
      .def(py::init<int, int, Matrix, Vector, Vector, double>(), py::arg("n_states"), py::arg("n_actions"),
           py::arg("transition"), py::arg("init_dist"), py::arg("true_cost"), py::arg("gamma"))
      .def_property_readonly("n_states", &TabularMdp::n_states)
      .def_property_readonly("n_actions", &TabularMdp::n_actions)
      .def_property_readonly("transition", &TabularMdp::transition)
      .def_property_readonly("init_dist", &TabularMdp::init_dist)
      .def_property_readonly("true_cost", &TabularMdp::true_cost)
      .def_property_readonly("gamma", &TabularMdp::gamma);

  py::class_<Policy>(m, "Policy")
      .def(py::init<Matrix>(), py::arg("probs"))
      .def_static("uniform", &Policy::uniform)
      .def_property_readonly("probs", &Policy::probs);

  py::class_<FeatureMap>(m, "FeatureMap")
      .def(py::init<Matrix, std::optional<Matrix>>(), py::arg("phi"), py::arg("factor_m") = std::nullopt)
      .def_property_readonly("phi", &FeatureMap::phi)
      .def_property_readonly("m", &FeatureMap::m)
      .def_property_readonly("factor_m", &FeatureMap::maybe_factor_m);
  m.def("tabular_features", &tabular_features);

  py::class_<Env>(m, "Env")
      .def_readonly("name", &Env::name)
      .def_readonly("mdp", &Env::mdp)
      .def_readonly("features", &Env::features)
      .def_readonly("grid_rows", &Env::grid_rows)
      .def_readonly("grid_cols", &Env::grid_cols);
  m.def("env_names", &env_names);
  m.def("make_env", &make_env, py::arg("name"), py::arg("params") = EnvParams{});
  m.def("env_defaults", &env_defaults);
  m.def("random_mdp", &random_mdp, py::arg("n_states"), py::arg("n_actions"), py::arg("gamma"), py::arg("seed"));
  m.def("random_linear_mdp", &random_linear_mdp, py::arg("n_states"), py::arg("n_actions"), py::arg("m"),
        py::arg("gamma"), py::arg("seed"));

  py::class_<ValueIterationResult>(m, "ValueIterationResult")
      .def_readonly("v", &ValueIterationResult::v)
      .def_readonly("q", &ValueIterationResult::q)
      .def_readonly("greedy", &ValueIterationResult::greedy)
      .def_readonly("iterations", &ValueIterationResult::iterations);
  m.def("value_iteration", &value_iteration, py::arg("mdp"), py::arg("cost"), py::arg("tol") = 1e-10);
  m.def(
      "occupancy", [](const TabularMdp& mdp, const Policy& p) { return occupancy_measure(mdp, p).mu(); },
      py::arg("mdp"), py::arg("policy"));
  m.def("policy_return", py::overload_cast<const TabularMdp&, const Policy&>(&policy_return));
  m.def("normalized_return", &normalized_return, py::arg("mdp"), py::arg("policy"), py::arg("expert"));
  m.def("c_distance", &c_distance, py::arg("mdp"), py::arg("policy"), py::arg("expert_fev"), py::arg("features"),
        py::arg("kind") = WKind::kSimplex);
  m.def(
      "optimal_expert",
      [](const TabularMdp& mdp, double soft_alpha) {
        return generate_expert(mdp, mdp.true_cost(),
                               soft_alpha > 0.0 ? ExpertKind::soft(soft_alpha) : ExpertKind::greedy());
      },
      py::arg("mdp"), py::arg("soft_alpha") = 0.0);

  py::class_<ReturnScale>(m, "ReturnScale")
      .def_readonly("uniform_return", &ReturnScale::uniform_return)
      .def_readonly("expert_return", &ReturnScale::expert_return)
      .def("normalize", &ReturnScale::normalize);

  py::class_<Trial>(m, "Trial")
      .def_readonly("env", &Trial::env)
      .def_readonly("expert", &Trial::expert)
      .def_readonly("expert_fev", &Trial::expert_fev)
      .def_readonly("expert_mu", &Trial::expert_mu)
      .def_readonly("scale", &Trial::scale)
      .def_readonly("beta_hat", &Trial::beta_hat);
  m.def(
      "make_trial",
      [](const std::string& name, const EnvParams& params, std::uint64_t seed, int n_trajs, int horizon,
         double soft_alpha) {
        return make_trial(name, params, seed, n_trajs, horizon,
                          soft_alpha > 0.0 ? ExpertKind::soft(soft_alpha) : ExpertKind::greedy());
      },
      py::arg("env"), py::arg("params") = EnvParams{}, py::arg("seed") = 0, py::arg("n_trajs") = 0,
      py::arg("horizon") = 0, py::arg("soft_alpha") = 0.0);

  py::class_<ExactCriticConfig>(m, "ExactCriticConfig")
      .def(py::init<>())
      .def_readwrite("tol", &ExactCriticConfig::tol)
      .def_readwrite("max_iters", &ExactCriticConfig::max_iters)
      .def_readwrite("accelerate", &ExactCriticConfig::accelerate);

  py::class_<SgdCriticConfig>(m, "SgdCriticConfig")
      .def(py::init<>())
      .def_readwrite("T", &SgdCriticConfig::T)
      .def_readwrite("n0", &SgdCriticConfig::n0)
      .def_readwrite("n_cap", &SgdCriticConfig::n_cap)
      .def_readwrite("beta0", &SgdCriticConfig::beta0)
      .def_readwrite("chi", &SgdCriticConfig::chi)
      .def_readwrite("minibatch", &SgdCriticConfig::minibatch)
      .def_readwrite("tail_fraction", &SgdCriticConfig::tail_fraction)
      .def_readwrite("draw_mode", &SgdCriticConfig::draw_mode)
      .def_readwrite("reuse_buffer", &SgdCriticConfig::reuse_buffer);

  py::class_<PpmConfig>(m, "PpmConfig")
      .def(py::init<>())
      .def_readwrite("eta", &PpmConfig::eta)
      .def_readwrite("alpha", &PpmConfig::alpha)
      .def_readwrite("K", &PpmConfig::K)
      .def_readwrite("critic", &PpmConfig::critic)
      .def_readwrite("exact", &PpmConfig::exact)
      .def_readwrite("sgd", &PpmConfig::sgd)
      .def_readwrite("w_kind", &PpmConfig::w_kind)
      .def_readwrite("theta_radius", &PpmConfig::theta_radius)
      .def_readwrite("beta_hat", &PpmConfig::beta_hat);

  py::class_<MdConfig>(m, "MdConfig")
      .def(py::init<>())
      .def_readwrite("eta", &MdConfig::eta)
      .def_readwrite("alpha", &MdConfig::alpha)
      .def_readwrite("beta", &MdConfig::beta)
      .def_readwrite("K", &MdConfig::K)
      .def_readwrite("w_kind", &MdConfig::w_kind)
      .def_readwrite("theta_radius", &MdConfig::theta_radius);

  py::class_<CriticParams>(m, "CriticParams")
      .def_readonly("w", &CriticParams::w)
      .def_readonly("theta", &CriticParams::theta);

  py::class_<IterationLog>(m, "IterationLog")
      .def_readonly("k", &IterationLog::k)
      .def_readonly("g_value", &IterationLog::g_value)
      .def_readonly("grad_norm", &IterationLog::grad_norm)
      .def_readonly("d_c_hat", &IterationLog::d_c_hat)
      .def_readonly("true_return", &IterationLog::true_return)
      .def_readonly("normalized_return", &IterationLog::normalized_return)
      .def_readonly("critic_converged", &IterationLog::critic_converged);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("policies", &RunResult::policies)
      .def_readonly("critics", &RunResult::critics)
      .def_readonly("log", &RunResult::log)
      .def_readonly("mixed_policy", &RunResult::mixed_policy)
      .def_readonly("average_w", &RunResult::average_w)
      .def_readonly("average_theta", &RunResult::average_theta)
      .def_readonly("theta_radius", &RunResult::theta_radius)
      .def_property_readonly("last_policy", &RunResult::last_policy);

  m.def("run_online", &run_online, py::arg("trial"), py::arg("config"), py::arg("seed") = 0,
        py::call_guard<py::gil_scoped_release>());
  m.def("run_md", &run_md, py::arg("trial"), py::arg("config"), py::call_guard<py::gil_scoped_release>());

  py::class_<OfflineResult>(m, "OfflineResult")
      .def_readonly("policy", &OfflineResult::policy)
      .def_readonly("params", &OfflineResult::params)
      .def_readonly("value", &OfflineResult::value)
      .def_readonly("converged", &OfflineResult::converged);
  m.def(
      "run_offline",
      [](const Env& env, int n_transitions, std::uint64_t seed, double eta, double alpha) {
        const Policy expert = generate_expert(env.mdp, env.mdp.true_cost(), ExpertKind::greedy());
        const TransitionBuffer buf =
            sample_occupancy_buffer(env.mdp, expert, n_transitions, DrawMode::kGeometric, seed);
        OfflineConfig cfg;
        cfg.eta = eta;
        cfg.alpha = alpha;
        return op2il_run(env.features, env.mdp.init_dist(), env.mdp.gamma(),
                         offline_batch_from_buffer(buf, env.features, env.mdp.n_states()), cfg);
      },
      py::arg("env"), py::arg("n_transitions") = 1000, py::arg("seed") = 0, py::arg("eta") = 10.0,
      py::arg("alpha") = 1.0, py::call_guard<py::gil_scoped_release>());

  m.def(
      "forward_q_lp", [](const TabularMdp& mdp, const Vector& c) { return forward_q_lp(mdp, c).value; },
      py::arg("mdp"), py::arg("cost"));
  m.def(
      "il_primal_zeta",
      [](const TabularMdp& mdp, const FeatureMap& f, const Vector& mu_e) { return il_primal_lp(mdp, f, mu_e).zeta; },
      py::arg("mdp"), py::arg("features"), py::arg("expert_mu"));
  m.def(
      "eps_certificate",
      [](const TabularMdp& mdp, const FeatureMap& f, const Vector& w, const Vector& v, const Vector& mu_e) {
        const Certificate c = eps_certificate(mdp, f, w, v, mu_e);
        return py::make_tuple(c.eps1, c.eps2);
      },
      py::arg("mdp"), py::arg("features"), py::arg("w"), py::arg("v"), py::arg("expert_mu"));

  py::class_<PropertyResult>(m, "PropertyResult")
      .def_readonly("module", &PropertyResult::module)
      .def_readonly("name", &PropertyResult::name)
      .def_readonly("passed", &PropertyResult::passed)
      .def_readonly("detail", &PropertyResult::detail);
  m.def("run_property_suite", &run_property_suite, py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());
}
