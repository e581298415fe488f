#pragma once

// Workload-split LP and its minimum-norm QP refinement.
//
//   LP:  z(w) = min sum_j h_j q_j   s.t.  D q = w,  q >= 0
//   QP:  min ||q||^2                s.t.  D q = w,  h.q <= z(w),  q >= 0
//
// with D[i][j] = A_ij / mu_j restricted to heavy resources x heavy job types.
// Problems are tiny (dozens of rows/columns), so everything is dense.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "collab/error.hpp"
#include "collab/network.hpp"

namespace collab {

struct SplitProblem {
  std::vector<int> heavy_resources;  // I^H, network indices (a1)
  std::vector<int> heavy_job_types;  // J^H, network indices (a2)
  std::vector<double> cost;          // h_j, j in J^H
  std::vector<double> rate;          // mu_j, j in J^H
  Eigen::MatrixXd D;                 // a1 x a2
  std::vector<double> workload;      // w_i >= 0, i in I^H

  int rows() const { return static_cast<int>(D.rows()); }
  int cols() const { return static_cast<int>(D.cols()); }
};

enum class SplitStatus { optimal, infeasible };

struct SplitSolution {
  double z = 0.0;
  std::vector<double> q_star;
  SplitStatus status = SplitStatus::optimal;
};

struct LpResult {
  double z = 0.0;
  std::vector<double> q;  // a vertex of the feasible polyhedron
};

struct SolverOptions {
  double tol_feas = 1e-9;
  double tol_opt = 1e-9;
  int max_iterations = 10000;
  /// Scan columns from the last to the first in Bland's rule. Only changes
  /// which optimal vertex is returned on degenerate problems.
  bool reverse_pivot_order = false;
};

/// Heavy restriction of `spec` with workload set to zero.
inline SplitProblem make_split_problem(const NetworkSpec& spec) {
  SplitProblem p;
  p.heavy_resources = heavy_resources(spec);
  p.heavy_job_types = heavy_job_types(spec);
  const int a1 = static_cast<int>(p.heavy_resources.size());
  const int a2 = static_cast<int>(p.heavy_job_types.size());
  p.D = Eigen::MatrixXd::Zero(a1, a2);
  for (int c = 0; c < a2; ++c) {
    const auto& jt = spec.job_types[p.heavy_job_types[c]];
    p.cost.push_back(jt.holding_cost);
    p.rate.push_back(jt.service_rate);
    for (int r = 0; r < a1; ++r)
      if (spec.uses(p.heavy_resources[r], p.heavy_job_types[c])) p.D(r, c) = 1.0 / jt.service_rate;
  }
  p.workload.assign(a1, 0.0);
  return p;
}

inline SplitProblem make_split_problem(const NetworkSpec& spec, std::span<const double> w) {
  SplitProblem p = make_split_problem(spec);
  if (static_cast<int>(w.size()) != p.rows())
    throw Error(ErrorCode::InvalidNetwork, "workload vector must have one entry per heavy resource");
  p.workload.assign(w.begin(), w.end());
  return p;
}

// ---------------------------------------------------------------------------
// Two-phase primal simplex, dense tableau, Bland's rule.

namespace detail {

class Tableau {
 public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), a_((rows + 1) * (cols + 1), 0.0) {}

  double& at(int r, int c) { return a_[r * (cols_ + 1) + c]; }
  double at(int r, int c) const { return a_[r * (cols_ + 1) + c]; }
  double& rhs(int r) { return at(r, cols_); }
  double& obj(int c) { return at(rows_, c); }

  void pivot(int pr, int pc) {
    const double inv = 1.0 / at(pr, pc);
    for (int c = 0; c <= cols_; ++c) at(pr, c) *= inv;
    at(pr, pc) = 1.0;
    for (int r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (int c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  int rows_, cols_;
  std::vector<double> a_;
};

constexpr double kPivotTol = 1e-11;

// Minimizes the objective row over columns [0, allowed) until no reduced cost
// is below -tol. Objective row holds reduced costs; its rhs holds -value.
inline void run_simplex(Tableau& t, std::vector<int>& basis, int allowed, const SolverOptions& opt,
                        int& iterations, const std::vector<bool>& row_active) {
  for (;;) {
    if (++iterations > opt.max_iterations)
      throw Error(ErrorCode::NumericalFailure, "simplex exceeded iteration cap");
    int enter = -1;
    for (int k = 0; k < allowed; ++k) {
      const int c = opt.reverse_pivot_order ? allowed - 1 - k : k;
      if (t.obj(c) < -opt.tol_opt) {
        enter = c;
        break;
      }
    }
    if (enter < 0) return;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < t.rows(); ++r) {
      if (!row_active[r]) continue;
      const double a = t.at(r, enter);
      if (a <= kPivotTol) continue;
      const double ratio = t.rhs(r) / a;
      if (leave < 0 || ratio < best - 1e-14 ||
          (std::abs(ratio - best) <= 1e-14 && basis[r] < basis[leave])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave < 0) throw Error(ErrorCode::NumericalFailure, "LP unbounded");
    t.pivot(leave, enter);
    basis[leave] = enter;
  }
}

}  // namespace detail

/// Solves the split LP. Throws Infeasible when no q >= 0 satisfies D q = w.
inline LpResult solve_lp(const SplitProblem& p, const SolverOptions& opt = {}) {
  const int m = p.rows();
  const int n = p.cols();
  LpResult res;
  res.q.assign(n, 0.0);
  if (m == 0) return res;

  detail::Tableau t(m, n + m);
  std::vector<int> basis(m);
  double scale = 1.0;
  for (int r = 0; r < m; ++r) {
    const double sign = p.workload[r] < 0 ? -1.0 : 1.0;
    for (int c = 0; c < n; ++c) t.at(r, c) = sign * p.D(r, c);
    t.at(r, n + r) = 1.0;
    t.rhs(r) = sign * p.workload[r];
    scale = std::max(scale, std::abs(p.workload[r]));
    basis[r] = n + r;
  }
  // phase 1: minimize the sum of artificials
  for (int c = 0; c <= n + m; ++c) {
    if (c >= n && c < n + m) continue;
    double s = 0.0;
    for (int r = 0; r < m; ++r) s += t.at(r, c);
    t.obj(c) = -s;
  }
  std::vector<bool> active(m, true);
  int iterations = 0;
  detail::run_simplex(t, basis, n, opt, iterations, active);
  if (-t.obj(n + m) > opt.tol_feas * scale)
    throw Error(ErrorCode::Infeasible, "no nonnegative split matches the workload");

  // drive artificials out of the basis; rows where that is impossible are redundant
  for (int r = 0; r < m; ++r) {
    if (basis[r] < n) continue;
    int pc = -1;
    for (int c = 0; c < n; ++c)
      if (std::abs(t.at(r, c)) > 1e-9) {
        pc = c;
        break;
      }
    if (pc >= 0) {
      t.pivot(r, pc);
      basis[r] = pc;
    } else {
      active[r] = false;
    }
  }

  // phase 2: reduced costs of the real objective
  for (int c = 0; c <= n + m; ++c) t.obj(c) = 0.0;
  for (int c = 0; c < n; ++c) t.obj(c) = p.cost[c];
  for (int r = 0; r < m; ++r) {
    if (!active[r]) continue;
    const double cb = p.cost[basis[r]];
    if (cb == 0.0) continue;
    for (int c = 0; c <= n + m; ++c) t.obj(c) -= cb * t.at(r, c);
  }
  detail::run_simplex(t, basis, n, opt, iterations, active);

  for (int r = 0; r < m; ++r)
    if (active[r] && basis[r] < n) res.q[basis[r]] = std::max(0.0, t.rhs(r));
  res.z = 0.0;
  for (int c = 0; c < n; ++c) res.z += p.cost[c] * res.q[c];
  return res;
}

// ---------------------------------------------------------------------------
// Primal active-set method for the minimum-norm point of the LP optimal face.

namespace detail {

// Indices of a maximal linearly independent subset of the rows of m, scanned in order.
inline std::vector<int> independent_rows(const Eigen::MatrixXd& m, double tol = 1e-10) {
  std::vector<int> keep;
  Eigen::MatrixXd basis(0, m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    Eigen::MatrixXd cand(basis.rows() + 1, m.cols());
    cand << basis, m.row(r);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(cand.transpose());
    qr.setThreshold(tol);
    if (qr.rank() == cand.rows()) {
      basis = cand;
      keep.push_back(r);
    }
  }
  return keep;
}

struct ActiveSetQp {
  // equality rows (full row rank) and the inequality family a_k . q >= b_k
  Eigen::MatrixXd eq;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq;
  Eigen::VectorXd ineq_rhs;

  Eigen::MatrixXd working_matrix(const std::vector<int>& w) const {
    Eigen::MatrixXd n(eq.rows() + static_cast<int>(w.size()), eq.cols());
    n.topRows(eq.rows()) = eq;
    for (std::size_t k = 0; k < w.size(); ++k) n.row(eq.rows() + k) = ineq.row(w[k]);
    return n;
  }

  Eigen::VectorXd working_rhs(const std::vector<int>& w) const {
    Eigen::VectorXd b(eq.rows() + static_cast<int>(w.size()));
    b.head(eq.rows()) = eq_rhs;
    for (std::size_t k = 0; k < w.size(); ++k) b(eq.rows() + k) = ineq_rhs(w[k]);
    return b;
  }

  bool independent_of(const std::vector<int>& w, int k) const {
    std::vector<int> cand = w;
    cand.push_back(k);
    const Eigen::MatrixXd n = working_matrix(cand);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(n.transpose());
    qr.setThreshold(1e-10);
    return qr.rank() == n.rows();
  }

  Eigen::VectorXd solve(Eigen::VectorXd q, const SolverOptions& opt) const {
    const int nvar = static_cast<int>(q.size());
    const int nin = static_cast<int>(ineq.rows());
    const double scale = 1.0 + q.cwiseAbs().maxCoeff();
    std::vector<int> w;
    std::vector<bool> in_w(nin, false);
    for (int k = 0; k < nin; ++k) {
      if (std::abs(ineq.row(k).dot(q) - ineq_rhs(k)) <= 1e-12 * scale && independent_of(w, k)) {
        w.push_back(k);
        in_w[k] = true;
      }
    }
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
      const Eigen::MatrixXd n = working_matrix(w);
      Eigen::VectorXd target;
      Eigen::LDLT<Eigen::MatrixXd> gram;
      if (n.rows() > 0) {
        gram.compute(n * n.transpose());
        target = n.transpose() * gram.solve(working_rhs(w));
      } else {
        target = Eigen::VectorXd::Zero(nvar);
      }
      const Eigen::VectorXd step = target - q;
      if (step.cwiseAbs().maxCoeff() <= 1e-13 * scale) {
        if (w.empty()) return q;
        const Eigen::VectorXd mult = gram.solve(n * q);
        int drop = -1;
        double worst = -1e-10 * scale;
        for (std::size_t k = 0; k < w.size(); ++k) {
          const double v = mult(eq.rows() + k);
          if (v < worst) {
            worst = v;
            drop = static_cast<int>(k);
          }
        }
        if (drop < 0) return q;
        in_w[w[drop]] = false;
        w.erase(w.begin() + drop);
        continue;
      }
      double alpha = 1.0;
      int block = -1;
      for (int k = 0; k < nin; ++k) {
        if (in_w[k]) continue;
        const double ap = ineq.row(k).dot(step);
        if (ap >= -1e-14 * scale) continue;
        const double slack = std::max(0.0, ineq.row(k).dot(q) - ineq_rhs(k));
        const double t = slack / -ap;
        if (t < alpha) {
          alpha = t;
          block = k;
        }
      }
      q += alpha * step;
      if (block >= 0) {
        w.push_back(block);
        in_w[block] = true;
      }
    }
    throw Error(ErrorCode::NumericalFailure, "active-set QP exceeded iteration cap");
  }
};

inline double cost_slack(double z) { return 1e-12 * std::max(1.0, std::abs(z)); }

}  // namespace detail

/// Minimum-Euclidean-norm optimal split, started from a feasible point of the
/// QP (typically an LP vertex).
inline SplitSolution solve_qp_min_norm(const SplitProblem& p, double z, std::span<const double> start,
                                       const SolverOptions& opt = {}) {
  const int m = p.rows();
  const int n = p.cols();
  SplitSolution sol;
  sol.z = z;
  if (n == 0) return sol;

  Eigen::MatrixXd aug(m, n + 1);
  aug << p.D, Eigen::Map<const Eigen::VectorXd>(p.workload.data(), m);
  const auto rows = detail::independent_rows(aug.leftCols(n));

  detail::ActiveSetQp qp;
  qp.eq.resize(static_cast<int>(rows.size()), n);
  qp.eq_rhs.resize(static_cast<int>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    qp.eq.row(k) = p.D.row(rows[k]);
    qp.eq_rhs(k) = p.workload[rows[k]];
  }
  qp.ineq = Eigen::MatrixXd::Zero(n + 1, n);
  qp.ineq_rhs = Eigen::VectorXd::Zero(n + 1);
  for (int c = 0; c < n; ++c) {
    qp.ineq(c, c) = 1.0;
    qp.ineq(n, c) = -p.cost[c];
  }
  qp.ineq_rhs(n) = -(z + detail::cost_slack(z));

  Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(start.data(), n);
  q = q.cwiseMax(0.0);
  q = qp.solve(q, opt);

  sol.q_star.resize(n);
  for (int c = 0; c < n; ++c) sol.q_star[c] = q(c) < 0 ? 0.0 : q(c);
  return sol;
}

inline SplitSolution solve_qp_min_norm(const SplitProblem& p, double z, const SolverOptions& opt = {}) {
  const LpResult vertex = solve_lp(p, opt);
  return solve_qp_min_norm(p, z, vertex.q, opt);
}

/// LP followed by the min-norm QP on the general dense path.
inline SplitSolution split_general(const SplitProblem& p, const SolverOptions& opt = {}) {
  LpResult lp;
  try {
    lp = solve_lp(p, opt);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Infeasible) throw;
    SplitSolution bad;
    bad.status = SplitStatus::infeasible;
    bad.q_star.assign(p.cols(), 0.0);
    return bad;
  }
  return solve_qp_min_norm(p, lp.z, lp.q, opt);
}

// ---------------------------------------------------------------------------
// Closed forms for one or two heavy resources (single station cmu case, and
// the two-resource hierarchical case with a shared top type).

namespace detail {

struct CheapestClass {
  double unit_cost = std::numeric_limits<double>::infinity();  // h_j mu_j
  std::vector<int> members;                                   // tied cheapest columns
  double inv_mu2_sum = 0.0;

  bool empty() const { return members.empty(); }

  // min-norm distribution of class workload u over the tied members
  void distribute(const SplitProblem& p, double u, std::vector<double>& q) const {
    for (int c : members) q[c] = u / (p.rate[c] * inv_mu2_sum);
  }
  double norm_weight() const { return 1.0 / inv_mu2_sum; }
};

inline CheapestClass cheapest(const SplitProblem& p, const std::vector<int>& cols) {
  CheapestClass cls;
  for (int c : cols) cls.unit_cost = std::min(cls.unit_cost, p.cost[c] * p.rate[c]);
  for (int c : cols) {
    const double uc = p.cost[c] * p.rate[c];
    if (std::abs(uc - cls.unit_cost) <= 1e-12 * cls.unit_cost) {
      cls.members.push_back(c);
      cls.inv_mu2_sum += 1.0 / (p.rate[c] * p.rate[c]);
    }
  }
  return cls;
}

}  // namespace detail

inline std::optional<SplitSolution> split_closed_form(const SplitProblem& p) {
  const int m = p.rows();
  const int n = p.cols();
  if (m == 0 || m > 2 || n == 0) return std::nullopt;
  SplitSolution sol;
  sol.q_star.assign(n, 0.0);

  if (m == 1) {
    std::vector<int> cols;
    for (int c = 0; c < n; ++c) {
      if (p.D(0, c) == 0.0) return std::nullopt;
      cols.push_back(c);
    }
    const auto cls = detail::cheapest(p, cols);
    const double w = p.workload[0];
    cls.distribute(p, w, sol.q_star);
    sol.z = cls.unit_cost * w;
    return sol;
  }

  std::vector<int> both, only1, only2;
  for (int c = 0; c < n; ++c) {
    const bool r1 = p.D(0, c) != 0.0, r2 = p.D(1, c) != 0.0;
    if (r1 && r2) both.push_back(c);
    else if (r1) only1.push_back(c);
    else if (r2) only2.push_back(c);
    else return std::nullopt;
  }
  if (both.empty() || only1.empty() || only2.empty()) return std::nullopt;
  const auto top = detail::cheapest(p, both);
  const auto left = detail::cheapest(p, only1);
  const auto right = detail::cheapest(p, only2);
  const double w1 = p.workload[0], w2 = p.workload[1];
  const double shared = std::min(w1, w2);
  const double split_cost = left.unit_cost + right.unit_cost;
  double s;
  if (std::abs(top.unit_cost - split_cost) <= 1e-12 * split_cost) {
    const double kb = top.norm_weight(), k1 = left.norm_weight(), k2 = right.norm_weight();
    s = std::clamp((k1 * w1 + k2 * w2) / (kb + k1 + k2), 0.0, shared);
  } else {
    s = top.unit_cost < split_cost ? shared : 0.0;
  }
  top.distribute(p, s, sol.q_star);
  left.distribute(p, w1 - s, sol.q_star);
  right.distribute(p, w2 - s, sol.q_star);
  sol.z = top.unit_cost * s + left.unit_cost * (w1 - s) + right.unit_cost * (w2 - s);
  return sol;
}

/// z(w) and q*(w). Uses the closed form when the heavy restriction admits one,
/// otherwise the LP + active-set QP.
inline SplitSolution split(const SplitProblem& p, const SolverOptions& opt = {}) {
  for (double w : p.workload)
    if (w < 0) throw Error(ErrorCode::Infeasible, "negative workload");
  if (auto fast = split_closed_form(p)) return *fast;
  return split_general(p, opt);
}

}  // namespace collab
