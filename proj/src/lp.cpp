#include "ppil/lp.hpp"

#include "ppil/numeric.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace ppil {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxPivots = 200000;
constexpr int kDegenerateStreak = 50;

class Tableau {
 public:
  Tableau(Matrix t, std::vector<int> basis) : t_(std::move(t)), basis_(std::move(basis)) {}

  int rows() const { return static_cast<int>(t_.rows()) - 1; }
  int cols() const { return static_cast<int>(t_.cols()) - 1; }
  Matrix& t() { return t_; }
  std::vector<int>& basis() { return basis_; }
  double rhs(int i) const { return t_(i, cols()); }

  void pivot(int r, int c) {
    t_.row(r) /= t_(r, c);
    for (int i = 0; i <= rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[r] = c;
  }

  // Minimizes the objective row; columns with allowed[j] == false never enter.
  LpStatus run(const std::vector<bool>& allowed, double tol, int& pivots) {
    const int obj = rows();
    int degenerate = 0;
    while (true) {
      // Dantzig pricing; Bland's rule while a degenerate streak lasts.
      const bool bland = degenerate > kDegenerateStreak;
      int enter = -1;
      double most = -tol;
      for (int j = 0; j < cols(); ++j) {
        if (!allowed[j] || !(t_(obj, j) < most)) continue;
        enter = j;
        if (bland) break;
        most = t_(obj, j);
      }
      if (enter < 0) return LpStatus::kOptimal;
      int leave = -1;
      double best = kInf;
      for (int i = 0; i < rows(); ++i) {
        const double a = t_(i, enter);
        if (a <= tol) continue;
        const double ratio = rhs(i) / a;
        if (ratio < best - 1e-12 || (std::abs(ratio - best) <= 1e-12 && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::kUnbounded;
      degenerate = best <= tol ? degenerate + 1 : 0;
      pivot(leave, enter);
      if (++pivots > kMaxPivots) throw NumericalError("solve_lp: pivot cap exceeded", 0.0);
    }
  }

 private:
  Matrix t_;
  std::vector<int> basis_;
};

struct Column {
  int var;
  double sign;
};

}  // namespace

LpResult solve_lp(const DenseLp& lp, double tol) {
  const int n = static_cast<int>(lp.c.size());
  const int n_eq = static_cast<int>(lp.b_eq.size());
  const int n_ub = static_cast<int>(lp.b_ub.size());
  if (lp.a_eq.rows() != n_eq || (n_eq > 0 && lp.a_eq.cols() != n))
    throw ConfigError("solve_lp: equality block has inconsistent shape");
  if (lp.a_ub.rows() != n_ub || (n_ub > 0 && lp.a_ub.cols() != n))
    throw ConfigError("solve_lp: inequality block has inconsistent shape");
  const Vector lower = lp.lower.size() == 0 ? Vector(Vector::Zero(n)) : lp.lower;
  const Vector upper = lp.upper.size() == 0 ? Vector(Vector::Constant(n, kInf)) : lp.upper;
  if (lower.size() != n || upper.size() != n) throw ConfigError("solve_lp: bounds must have length n");
  if (!lp.c.allFinite() || (n_eq > 0 && !lp.a_eq.allFinite()) || (n_ub > 0 && !lp.a_ub.allFinite()) ||
      !lp.b_eq.allFinite() || !lp.b_ub.allFinite())
    throw ConfigError("solve_lp: non-finite data");

  // x = offset + Σ sign·y over the columns of each variable, y ≥ 0.
  std::vector<Column> ycols;
  Vector offset = Vector::Zero(n);
  std::vector<std::pair<int, double>> box_rows;  // (column, upper − lower)
  for (int j = 0; j < n; ++j) {
    const bool lo = std::isfinite(lower(j)), hi = std::isfinite(upper(j));
    if (lo && hi && upper(j) < lower(j)) return LpResult{LpStatus::kInfeasible, 0.0, Vector(), 0};
    if (lo) {
      offset(j) = lower(j);
      ycols.push_back({j, 1.0});
      if (hi) box_rows.emplace_back(static_cast<int>(ycols.size()) - 1, upper(j) - lower(j));
    } else if (hi) {
      offset(j) = upper(j);
      ycols.push_back({j, -1.0});
    } else {
      ycols.push_back({j, 1.0});
      ycols.push_back({j, -1.0});
    }
  }
  const int ny = static_cast<int>(ycols.size());
  const int n_box = static_cast<int>(box_rows.size());
  const int n_le = n_ub + n_box;
  const int m = n_eq + n_le;

  // Row data in y, before sign normalization.
  Matrix a = Matrix::Zero(m, ny);
  Vector b(m);
  for (int i = 0; i < n_eq; ++i) {
    for (int k = 0; k < ny; ++k) a(i, k) = lp.a_eq(i, ycols[k].var) * ycols[k].sign;
    b(i) = lp.b_eq(i) - lp.a_eq.row(i).dot(offset);
  }
  for (int i = 0; i < n_ub; ++i) {
    for (int k = 0; k < ny; ++k) a(n_eq + i, k) = lp.a_ub(i, ycols[k].var) * ycols[k].sign;
    b(n_eq + i) = lp.b_ub(i) - lp.a_ub.row(i).dot(offset);
  }
  for (int i = 0; i < n_box; ++i) {
    a(n_eq + n_ub + i, box_rows[i].first) = 1.0;
    b(n_eq + n_ub + i) = box_rows[i].second;
  }

  // Columns: y | slacks (one per ≤ row) | artificials (as needed).
  std::vector<int> art_row;
  std::vector<double> row_sign(m, 1.0);
  for (int i = 0; i < m; ++i) {
    if (b(i) < 0.0) row_sign[i] = -1.0;
    const bool le = i >= n_eq;
    if (!le || row_sign[i] < 0.0) art_row.push_back(i);
  }
  const int n_art = static_cast<int>(art_row.size());
  const int ncols = ny + n_le + n_art;
  const long cells = static_cast<long>(m + 1) * (ncols + 1);
  if (cells > kLpMaxTableau) throw ConfigError("solve_lp: problem exceeds the dense scale cap");

  Matrix t = Matrix::Zero(m + 1, ncols + 1);
  std::vector<int> basis(m, -1);
  for (int i = 0; i < m; ++i) {
    t.row(i).head(ny) = row_sign[i] * a.row(i);
    t(i, ncols) = row_sign[i] * b(i);
    if (i >= n_eq) {
      const int sc = ny + (i - n_eq);
      t(i, sc) = row_sign[i];
      if (row_sign[i] > 0.0) basis[i] = sc;
    }
  }
  for (int k = 0; k < n_art; ++k) {
    t(art_row[k], ny + n_le + k) = 1.0;
    basis[art_row[k]] = ny + n_le + k;
  }
  const int obj = m;
  for (int k = 0; k < n_art; ++k) {
    t(obj, ny + n_le + k) = 1.0;
    t.row(obj) -= t.row(art_row[k]);
  }

  Tableau tab(std::move(t), std::move(basis));
  int pivots = 0;
  std::vector<bool> allowed(ncols, true);
  const double scale = 1.0 + (b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
  if (n_art > 0) {
    tab.run(allowed, tol, pivots);
    if (-tab.t()(obj, ncols) > 1e-7 * scale) return LpResult{LpStatus::kInfeasible, 0.0, Vector(), pivots};
    // Move remaining artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (tab.basis()[i] < ny + n_le) continue;
      for (int j = 0; j < ny + n_le; ++j)
        if (std::abs(tab.t()(i, j)) > 1e-9) {
          tab.pivot(i, j);
          break;
        }
    }
    for (int k = 0; k < n_art; ++k) allowed[ny + n_le + k] = false;
  }

  // Phase two objective in reduced form.
  Vector cy = Vector::Zero(ncols);
  for (int k = 0; k < ny; ++k) cy(k) = lp.c(ycols[k].var) * ycols[k].sign;
  tab.t().row(obj).setZero();
  tab.t().row(obj).head(ncols) = cy.transpose();
  for (int i = 0; i < m; ++i) {
    const double cb = cy(tab.basis()[i]);
    if (cb != 0.0) tab.t().row(obj) -= cb * tab.t().row(i);
  }
  const LpStatus st = tab.run(allowed, tol, pivots);
  if (st == LpStatus::kUnbounded) return LpResult{LpStatus::kUnbounded, -kInf, Vector(), pivots};

  Vector y = Vector::Zero(ncols);
  for (int i = 0; i < m; ++i) y(tab.basis()[i]) = tab.rhs(i);
  Vector x = offset;
  for (int k = 0; k < ny; ++k) x(ycols[k].var) += ycols[k].sign * y(k);
  return LpResult{LpStatus::kOptimal, lp.c.dot(x), x, pivots};
}

namespace {

// (B − γP) as an (S·A) x S matrix.
Matrix flow_operator(const TabularMdp& mdp) {
  Matrix e = -mdp.gamma() * mdp.transition();
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a) e(mdp.index(s, a), s) += 1.0;
  return e;
}

void require_optimal(const LpResult& r, const char* who) {
  if (r.status != LpStatus::kOptimal)
    throw NumericalError(std::string(who) + ": LP is " + to_string(r.status), 0.0);
}

}  // namespace

QLpResult forward_q_lp(const TabularMdp& mdp, const Vector& cost) {
  if (cost.size() != mdp.n_pairs()) throw ConfigError("forward_q_lp: cost must have length S·A");
  const int S = mdp.n_states();
  DenseLp lp;
  lp.c = -(1.0 - mdp.gamma()) * mdp.init_dist();
  lp.a_ub = flow_operator(mdp);
  lp.b_ub = cost;
  lp.lower = Vector::Constant(S, -kInf);
  lp.upper = Vector::Constant(S, kInf);
  const LpResult r = solve_lp(lp);
  require_optimal(r, "forward_q_lp");
  QLpResult out;
  out.value = -r.value;
  out.v = r.x;
  out.q = cost + mdp.gamma() * mdp.transition() * r.x;
  return out;
}

PrimalQLpResult primal_q_lp(const TabularMdp& mdp, const Vector& cost) {
  if (cost.size() != mdp.n_pairs()) throw ConfigError("primal_q_lp: cost must have length S·A");
  const int S = mdp.n_states(), n = mdp.n_pairs();
  // Variables (μ, d); μ free, d ≥ 0.
  DenseLp lp;
  lp.c = Vector::Zero(2 * n);
  lp.c.head(n) = cost;
  lp.a_eq = Matrix::Zero(S + n, 2 * n);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < mdp.n_actions(); ++a) lp.a_eq(s, n + mdp.index(s, a)) = 1.0;
  lp.a_eq.block(0, 0, S, n) = -mdp.gamma() * mdp.transition().transpose();
  lp.a_eq.block(S, 0, n, n) = -Matrix::Identity(n, n);
  lp.a_eq.block(S, n, n, n) = Matrix::Identity(n, n);
  lp.b_eq = Vector::Zero(S + n);
  lp.b_eq.head(S) = (1.0 - mdp.gamma()) * mdp.init_dist();
  lp.lower = Vector::Zero(2 * n);
  lp.lower.head(n).setConstant(-kInf);
  lp.upper = Vector::Constant(2 * n, kInf);
  const LpResult r = solve_lp(lp);
  require_optimal(r, "primal_q_lp");
  return PrimalQLpResult{r.value, r.x.head(n), r.x.tail(n)};
}

IlPrimalResult il_primal_lp(const TabularMdp& mdp, const FeatureMap& features, const Vector& expert_mu) {
  const int S = mdp.n_states(), n = mdp.n_pairs(), m = features.m();
  if (features.n_pairs() != n || expert_mu.size() != n) throw ConfigError("il_primal_lp: shape mismatch");
  // Variables (μ ≥ 0, t free).
  DenseLp lp;
  lp.c = Vector::Zero(n + 1);
  lp.c(n) = 1.0;
  lp.a_eq = Matrix::Zero(S, n + 1);
  lp.a_eq.leftCols(n) = flow_operator(mdp).transpose();
  lp.b_eq = (1.0 - mdp.gamma()) * mdp.init_dist();
  lp.a_ub = Matrix::Zero(m, n + 1);
  lp.a_ub.leftCols(n) = features.phi().transpose();
  lp.a_ub.col(n).setConstant(-1.0);
  lp.b_ub = features.phi().transpose() * expert_mu;
  lp.lower = Vector::Zero(n + 1);
  lp.lower(n) = -kInf;
  lp.upper = Vector::Constant(n + 1, kInf);
  const LpResult r = solve_lp(lp);
  require_optimal(r, "il_primal_lp");
  return IlPrimalResult{r.value, r.x.head(n)};
}

namespace {

// min ½‖F a − r‖² over the simplex, accelerated projected gradient.
Vector simplex_least_squares(const Matrix& f, const Vector& r, Vector a) {
  const Matrix g = f.transpose() * f;
  const Vector fr = f.transpose() * r;
  const double lip = std::max(g.trace(), 1e-12);
  Vector y = a, prev = a;
  double tk = 1.0;
  for (int it = 0; it < 5000; ++it) {
    const Vector next = numeric::project_simplex(y - (g * y - fr) / lip);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    y = next + ((tk - 1.0) / tn) * (next - prev);
    if ((next - prev).lpNorm<Eigen::Infinity>() < 1e-15) {
      prev = next;
      break;
    }
    prev = next;
    tk = tn;
  }
  return prev;
}

}  // namespace

IlPrimalResult il_primal_ball(const TabularMdp& mdp, const FeatureMap& features, const Vector& expert_mu,
                              int max_iters, double tol) {
  const int n = mdp.n_pairs();
  if (features.n_pairs() != n || expert_mu.size() != n) throw ConfigError("il_primal_ball: shape mismatch");
  const Matrix& phi = features.phi();
  const Vector rho = phi.transpose() * expert_mu;
  std::vector<Vector> verts;
  auto vertex = [&](const Vector& cost) {
    return occupancy_measure(mdp, value_iteration(mdp, cost).greedy).mu();
  };
  verts.push_back(vertex(Vector::Zero(n)));
  Vector weights = Vector::Ones(1);
  Vector mu = verts[0];
  for (int it = 0; it < max_iters; ++it) {
    const Vector grad = phi * (phi.transpose() * mu - rho);
    const Vector v = vertex(grad);
    if ((mu - v).dot(grad) <= tol) break;
    bool known = false;
    for (const auto& u : verts) known = known || (u - v).lpNorm<Eigen::Infinity>() < 1e-12;
    if (known) break;
    verts.push_back(v);
    Matrix f(phi.cols(), static_cast<Eigen::Index>(verts.size()));
    for (size_t k = 0; k < verts.size(); ++k) f.col(static_cast<Eigen::Index>(k)) = phi.transpose() * verts[k];
    Vector init = Vector::Zero(static_cast<Eigen::Index>(verts.size()));
    init.head(weights.size()) = weights;
    weights = simplex_least_squares(f, rho, init);
    mu.setZero();
    for (size_t k = 0; k < verts.size(); ++k) mu += weights(static_cast<Eigen::Index>(k)) * verts[k];
  }
  return IlPrimalResult{(phi.transpose() * mu - rho).norm(), mu};
}

Certificate eps_certificate(const TabularMdp& mdp, const FeatureMap& features, const Vector& w,
                            const Vector& v, const Vector& expert_mu) {
  if (w.size() != features.m() || v.size() != mdp.n_states() || expert_mu.size() != mdp.n_pairs())
    throw ConfigError("eps_certificate: shape mismatch");
  const Vector c = features.phi() * w;
  Certificate out;
  out.eps1 = std::max(0.0, expert_mu.dot(c) - (1.0 - mdp.gamma()) * mdp.init_dist().dot(v));
  const Vector slack = c - flow_operator(mdp) * v;  // c + γPV − BV
  out.eps2 = std::max(0.0, -slack.minCoeff());
  return out;
}

}  // namespace ppil
