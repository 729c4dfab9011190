#include "ppil/mdp.hpp"

#include "ppil/numeric.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ppil {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

TabularMdp::TabularMdp(int n_states, int n_actions, Matrix transition, Vector init_dist,
                       Vector true_cost, double gamma)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      init_dist_(std::move(init_dist)),
      true_cost_(std::move(true_cost)),
      gamma_(gamma) {
  require(n_states > 0 && n_actions > 0, "mdp: n_states and n_actions must be positive");
  const int sa = n_states * n_actions;
  require(transition_.rows() == sa && transition_.cols() == n_states,
          "mdp: transition must have shape (S*A) x S");
  require(init_dist_.size() == n_states, "mdp: init_dist must have length S");
  require(true_cost_.size() == sa, "mdp: true_cost must have length S*A");
  require(gamma_ > 0.0 && gamma_ < 1.0, "mdp: gamma must lie in (0,1)");
  require(transition_.allFinite() && transition_.minCoeff() >= 0.0,
          "mdp: transition entries must be nonnegative");
  for (int i = 0; i < sa; ++i) {
    if (std::abs(transition_.row(i).sum() - 1.0) > kConstructionTol) {
      std::ostringstream os;
      os << "mdp: transition row " << i << " does not sum to 1";
      throw ConfigError(os.str());
    }
  }
  require(init_dist_.allFinite() && init_dist_.minCoeff() >= 0.0 &&
              std::abs(init_dist_.sum() - 1.0) <= kConstructionTol,
          "mdp: init_dist must be a probability vector");
  require(true_cost_.allFinite() && true_cost_.minCoeff() >= 0.0 && true_cost_.maxCoeff() <= 1.0,
          "mdp: true_cost entries must lie in [0,1]");
}

TabularMdp TabularMdp::with_cost(Vector cost) const {
  return TabularMdp(n_states_, n_actions_, transition_, init_dist_, std::move(cost), gamma_);
}

Policy::Policy(Matrix probs) : probs_(std::move(probs)) {
  require(probs_.rows() > 0 && probs_.cols() > 0, "policy: empty matrix");
  require(probs_.allFinite() && probs_.minCoeff() >= 0.0, "policy: entries must be nonnegative");
  for (Eigen::Index s = 0; s < probs_.rows(); ++s)
    require(std::abs(probs_.row(s).sum() - 1.0) <= kConstructionTol,
            "policy: rows must sum to 1");
}

Policy Policy::uniform(int n_states, int n_actions) {
  return Policy(Matrix::Constant(n_states, n_actions, 1.0 / n_actions));
}

Policy Policy::deterministic(const std::vector<int>& actions, int n_actions) {
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(actions.size()), n_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    require(actions[s] >= 0 && actions[s] < n_actions, "policy: action out of range");
    p(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
  }
  return Policy(std::move(p));
}

Vector Policy::flat() const {
  Matrix t = probs_.transpose();
  return Eigen::Map<const Vector>(t.data(), t.size());
}

OccupancyMeasure::OccupancyMeasure(Vector mu) : mu_(std::move(mu)) {
  require(numeric::is_probability_vector(mu_, kDerivedTol), "occupancy: must be a probability vector");
}

Matrix policy_transition(const TabularMdp& mdp, const Policy& policy) {
  const int S = mdp.n_states(), A = mdp.n_actions();
  require(policy.n_states() == S && policy.n_actions() == A, "policy shape does not match mdp");
  Matrix pp = Matrix::Zero(S, S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const double p = policy(s, a);
      if (p != 0.0) pp.row(s) += p * mdp.transition().row(mdp.index(s, a));
    }
  return pp;
}

Vector policy_cost(const TabularMdp& mdp, const Policy& policy, const Vector& cost) {
  const int S = mdp.n_states(), A = mdp.n_actions();
  require(cost.size() == mdp.n_pairs(), "cost length must be S*A");
  Vector c = Vector::Zero(S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) c(s) += policy(s, a) * cost(mdp.index(s, a));
  return c;
}

Vector state_marginal(const Vector& mu, int n_states, int n_actions) {
  return Eigen::Map<const Matrix>(mu.data(), n_actions, n_states).colwise().sum().transpose();
}

OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const Policy& policy, double tol) {
  const int S = mdp.n_states(), A = mdp.n_actions();
  const double g = mdp.gamma();
  const Matrix pp = policy_transition(mdp, policy);
  const Vector rhs = (1.0 - g) * mdp.init_dist();
  Vector x;
  if (mdp.n_pairs() <= 5000) {
    Matrix lhs = Matrix::Identity(S, S) - g * pp.transpose();
    x = lhs.partialPivLu().solve(rhs);
  } else {
    const int cap = 10 * static_cast<int>(std::ceil(std::log(tol) / std::log(g)));
    x = rhs;
    Vector term = rhs;
    for (int it = 0; it < cap; ++it) {
      term = g * (pp.transpose() * term);
      x += term;
      if (term.lpNorm<1>() <= tol * (1.0 - g)) break;
    }
  }
  Vector mu(mdp.n_pairs());
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) mu(mdp.index(s, a)) = std::max(0.0, policy(s, a) * x(s));
  const double residual = bellman_flow_residual(mdp, mu);
  if (!(residual <= 10.0 * std::max(tol, 1e-14)))
    throw NumericalError("occupancy_measure: flow residual above tolerance", residual);
  // Solver round-off only; renormalize so the sum is exact to machine precision.
  mu /= mu.sum();
  return OccupancyMeasure(std::move(mu));
}

Policy policy_from_occupancy(const OccupancyMeasure& mu, int n_states, int n_actions) {
  require(mu.size() == static_cast<Eigen::Index>(n_states) * n_actions,
          "occupancy length must be S*A");
  Matrix p(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    double total = 0.0;
    for (int a = 0; a < n_actions; ++a) total += mu(s * n_actions + a);
    for (int a = 0; a < n_actions; ++a)
      p(s, a) = total > 0.0 ? mu(s * n_actions + a) / total : 1.0 / n_actions;
  }
  return Policy(std::move(p));
}

Vector policy_evaluation(const TabularMdp& mdp, const Policy& policy, const Vector& cost) {
  const int S = mdp.n_states();
  Matrix lhs = Matrix::Identity(S, S) - mdp.gamma() * policy_transition(mdp, policy);
  return lhs.partialPivLu().solve(policy_cost(mdp, policy, cost));
}

double total_cost(const TabularMdp& mdp, const Policy& policy, const Vector& cost) {
  const OccupancyMeasure mu = occupancy_measure(mdp, policy);
  const double via_mu = mu.mu().dot(cost);
  const double via_v = (1.0 - mdp.gamma()) * mdp.init_dist().dot(policy_evaluation(mdp, policy, cost));
  const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
  if (std::abs(via_mu - via_v) > 1e-8 * scale)
    throw NumericalError("total_cost: occupancy and value routes disagree",
                         std::abs(via_mu - via_v));
  return via_mu;
}

Vector q_from_v(const TabularMdp& mdp, const Vector& cost, const Vector& v) {
  return cost + mdp.gamma() * (mdp.transition() * v);
}

Policy greedy_policy(const Vector& q, int n_states, int n_actions, double tie_tol) {
  std::vector<int> actions(n_states, 0);
  for (int s = 0; s < n_states; ++s) {
    const double m = q.segment(s * n_actions, n_actions).minCoeff();
    for (int a = 0; a < n_actions; ++a)
      if (q(s * n_actions + a) <= m + tie_tol) {
        actions[s] = a;
        break;
      }
  }
  return Policy::deterministic(actions, n_actions);
}

namespace {

int contraction_cap(double gamma, double tol, double scale) {
  // Iterations for γ^n·scale/(1−γ) to fall below tol, with slack.
  const double need = std::log(tol * (1.0 - gamma) / std::max(scale, 1e-300)) / std::log(gamma);
  return 10 + 2 * static_cast<int>(std::ceil(std::max(need, 1.0)));
}

}  // namespace

ValueIterationResult value_iteration(const TabularMdp& mdp, const Vector& cost, double tol) {
  require(tol > 0.0, "value_iteration: tol must be positive");
  require(cost.size() == mdp.n_pairs(), "cost length must be S*A");
  const int S = mdp.n_states(), A = mdp.n_actions();
  Vector v = Vector::Zero(S);
  const int cap = contraction_cap(mdp.gamma(), tol, cost.cwiseAbs().maxCoeff() + 1.0);
  double gap = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < cap; ++it) {
    const Vector q = q_from_v(mdp, cost, v);
    Vector tv(S);
    for (int s = 0; s < S; ++s) tv(s) = q.segment(s * A, A).minCoeff();
    gap = (tv - v).lpNorm<Eigen::Infinity>();
    v = tv;
    if (gap <= tol * (1.0 - mdp.gamma())) break;
  }
  if (gap > tol * (1.0 - mdp.gamma()))
    throw NumericalError("value_iteration: iteration cap exceeded", gap);
  Vector q = q_from_v(mdp, cost, v);
  return {v, q, greedy_policy(q, S, A), it + 1};
}

SoftValueIterationResult soft_value_iteration(const TabularMdp& mdp, const Vector& cost,
                                              double alpha, double tol) {
  require(alpha > 0.0, "soft_value_iteration: alpha must be positive");
  require(cost.size() == mdp.n_pairs(), "cost length must be S*A");
  const int S = mdp.n_states(), A = mdp.n_actions();
  auto softmin = [&](const Vector& q) {
    Vector v(S);
    for (int s = 0; s < S; ++s) {
      const Eigen::ArrayXd row = q.segment(s * A, A).array();
      const double m = row.minCoeff();
      v(s) = m - std::log((-alpha * (row - m)).exp().sum()) / alpha;
    }
    return v;
  };
  Vector v = Vector::Zero(S);
  const double scale = cost.cwiseAbs().maxCoeff() + std::log(A) / alpha + 1.0;
  const int cap = contraction_cap(mdp.gamma(), tol, scale);
  double gap = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < cap; ++it) {
    const Vector tv = softmin(q_from_v(mdp, cost, v));
    gap = (tv - v).lpNorm<Eigen::Infinity>();
    v = tv;
    if (gap <= tol * (1.0 - mdp.gamma())) break;
  }
  if (gap > tol * (1.0 - mdp.gamma()))
    throw NumericalError("soft_value_iteration: iteration cap exceeded", gap);
  const Vector q = q_from_v(mdp, cost, v);
  Matrix p(S, A);
  for (int s = 0; s < S; ++s) {
    Eigen::ArrayXd z = -alpha * (q.segment(s * A, A).array() - q.segment(s * A, A).minCoeff());
    z = z.exp();
    p.row(s) = (z / z.sum()).matrix().transpose();
  }
  return {v, q, Policy(std::move(p)), it + 1};
}

double bellman_flow_residual(const TabularMdp& mdp, const Vector& mu) {
  require(mu.size() == mdp.n_pairs(), "occupancy length must be S*A");
  const Vector inflow = mdp.gamma() * (mdp.transition().transpose() * mu) +
                        (1.0 - mdp.gamma()) * mdp.init_dist();
  const Vector outflow = state_marginal(mu, mdp.n_states(), mdp.n_actions());
  return (outflow - inflow).lpNorm<Eigen::Infinity>();
}

TabularMdp permute_actions(const TabularMdp& mdp, const std::vector<int>& perm) {
  const int S = mdp.n_states(), A = mdp.n_actions();
  require(static_cast<int>(perm.size()) == A, "permutation length must equal n_actions");
  Matrix p(mdp.n_pairs(), S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      require(perm[a] >= 0 && perm[a] < A, "permutation entry out of range");
      p.row(mdp.index(s, a)) = mdp.transition().row(mdp.index(s, perm[a]));
    }
  return TabularMdp(S, A, std::move(p), mdp.init_dist(), mdp.true_cost(), mdp.gamma());
}

}  // namespace ppil
