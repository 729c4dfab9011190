#include "ppil/eval.hpp"

namespace ppil {

double c_distance_fev(const Vector& learner_fev, const Vector& expert_fev, WKind kind) {
  if (learner_fev.size() != expert_fev.size()) throw ConfigError("c_distance: length mismatch");
  const Vector diff = learner_fev - expert_fev;
  if (kind == WKind::kBall) return diff.norm();
  return std::max(0.0, diff.maxCoeff());
}

double c_distance(const TabularMdp& mdp, const Policy& policy, const Vector& expert_fev,
                  const FeatureMap& features, WKind kind) {
  const Vector lam = fev(features, occupancy_measure(mdp, policy).mu());
  return c_distance_fev(lam, expert_fev, kind);
}

double ReturnScale::normalize(double ret) const {
  const double span = expert_return - uniform_return;
  if (span == 0.0) return ret >= expert_return ? 1.0 : 0.0;
  return (ret - uniform_return) / span;
}

double policy_return(const TabularMdp& mdp, const Policy& policy, const Vector& cost) {
  return -total_cost(mdp, policy, cost);
}

double policy_return(const TabularMdp& mdp, const Policy& policy) {
  return policy_return(mdp, policy, mdp.true_cost());
}

ReturnScale make_return_scale(const TabularMdp& mdp, const Policy& expert, const Vector& cost) {
  return {policy_return(mdp, Policy::uniform(mdp.n_states(), mdp.n_actions()), cost),
          policy_return(mdp, expert, cost)};
}

ReturnScale make_return_scale(const TabularMdp& mdp, const Policy& expert) {
  return make_return_scale(mdp, expert, mdp.true_cost());
}

double normalized_return(const TabularMdp& mdp, const Policy& policy, const Policy& expert) {
  return make_return_scale(mdp, expert).normalize(policy_return(mdp, policy));
}

RecoveredCostReport recovered_cost_eval(const TabularMdp& mdp, const Vector& c_recovered,
                                        const Policy& expert) {
  const ValueIterationResult rec = value_iteration(mdp, c_recovered);
  const ValueIterationResult tru = value_iteration(mdp, mdp.true_cost());
  RecoveredCostReport r{rec.greedy, 0.0, 0.0, 0.0, rec.v, tru.v};
  r.true_cost = total_cost(mdp, rec.greedy, mdp.true_cost());
  r.true_return = -r.true_cost;
  r.normalized_return = make_return_scale(mdp, expert).normalize(r.true_return);
  return r;
}

TransferReport transfer_eval(const TabularMdp& source, const TabularMdp& target,
                             const Vector& c_recovered, const Policy& learned) {
  if (source.n_states() != target.n_states() || source.n_actions() != target.n_actions())
    throw ConfigError("transfer_eval: source and target must share state and action sets");
  TransferReport r;
  r.optimal_target = policy_return(target, value_iteration(target, target.true_cost()).greedy);
  r.expert_source =
      policy_return(target, value_iteration(source, source.true_cost()).greedy);
  r.recovered_target = policy_return(target, value_iteration(target, c_recovered).greedy);
  r.learned = policy_return(target, learned);
  return r;
}

}  // namespace ppil
