#pragma once

// Heavy-traffic workload limit: a reflected Brownian motion on the heavy
// resources with identity reflection, so every coordinate is the
// one-dimensional Skorokhod reflection of its own (correlated) driving
// Brownian coordinate.

#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "collab/error.hpp"
#include "collab/network.hpp"
#include "collab/parallel.hpp"
#include "collab/random.hpp"
#include "collab/solver.hpp"

namespace collab {

struct DiffusionData {
  std::vector<int> heavy_resources;
  Eigen::VectorXd theta;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd chol;  // lower factor, sigma = chol * chol^T
  Eigen::VectorXd start;

  int dim() const { return static_cast<int>(theta.size()); }
};

/// Cholesky factor of a covariance. A zero matrix is allowed (no noise).
inline Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& sigma) {
  if (sigma.size() == 0 || sigma.isZero(0.0)) return Eigen::MatrixXd::Zero(sigma.rows(), sigma.cols());
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite, "workload covariance is not positive definite");
  return llt.matrixL();
}

/// Drift r (rho_i - 1) and covariance
/// Sigma_ik = sum over j in J_i and J_k of lambda_j (ca_j^2 + cs_j^2) / mu_j^2.
inline DiffusionData build_diffusion(const NetworkSpec& spec, double scale,
                                     std::optional<std::vector<double>> theta = std::nullopt) {
  DiffusionData d;
  d.heavy_resources = heavy_resources(spec);
  const int n = static_cast<int>(d.heavy_resources.size());
  const auto rho = loads(spec);
  d.theta.resize(n);
  if (theta && static_cast<int>(theta->size()) != n)
    throw Error(ErrorCode::InvalidNetwork, "theta needs one entry per heavy resource");
  for (int a = 0; a < n; ++a) d.theta[a] = theta ? (*theta)[a] : scale * (rho[d.heavy_resources[a]] - 1.0);
  d.sigma = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < spec.num_job_types(); ++j) {
    const auto& jt = spec.job_types[j];
    const double v = jt.arrival_rate * (jt.arrival_cv * jt.arrival_cv + jt.service_cv * jt.service_cv) /
                     (jt.service_rate * jt.service_rate);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (spec.uses(d.heavy_resources[a], j) && spec.uses(d.heavy_resources[b], j)) d.sigma(a, b) += v;
  }
  d.chol = covariance_factor(d.sigma);
  d.start = Eigen::VectorXd::Zero(n);
  return d;
}

/// Sampled path on the grid t_k = k dt, k = 0..steps.
struct SrbmPath {
  double dt = 0.0;
  std::vector<Eigen::VectorXd> w;        // reflected process
  std::vector<Eigen::VectorXd> pushing;  // nondecreasing regulator
};

/// Reflection of a sampled free path: W = X + max(0, running max of -X).
inline void skorokhod_reflect(std::span<const double> x, std::span<double> w, std::span<double> y) {
  double m = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    m = std::max(m, -x[k]);
    y[k] = m;
    w[k] = x[k] + m;
  }
}

/// Euler-Maruyama for the free process, reflected coordinatewise.
inline SrbmPath simulate_srbm(const DiffusionData& d, double horizon, double dt, std::uint64_t seed) {
  if (!(dt > 0)) throw Error(ErrorCode::InvalidNetwork, "dt must be > 0");
  const int n = d.dim();
  const long steps = static_cast<long>(std::llround(horizon / dt));
  CounterStream rng(seed, StreamRole::diffusion, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  SrbmPath path;
  path.dt = dt;
  path.w.reserve(steps + 1);
  path.pushing.reserve(steps + 1);
  Eigen::VectorXd x = d.start, y = Eigen::VectorXd::Zero(n), z(n);
  const double sq = std::sqrt(dt);
  path.w.push_back(x);
  path.pushing.push_back(y);
  for (long k = 0; k < steps; ++k) {
    for (int a = 0; a < n; ++a) z[a] = normal(rng);
    x += d.theta * dt + d.chol * z * sq;
    for (int a = 0; a < n; ++a) y[a] = std::max(y[a], -x[a]);
    path.w.push_back(x + y);
    path.pushing.push_back(y);
  }
  return path;
}

struct LowerBoundOptions {
  double scale = 10.0;
  double discount = 1.0;
  double horizon = 10.0;
  double dt = 1e-3;
  int replications = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  std::optional<std::vector<double>> theta;
};

struct LowerBoundResult {
  double estimate = 0.0;
  double std_error = 0.0;
  double tail_bound = 0.0;  // mean of exp(-delta H) z(W(H)) / delta
  int replications = 0;
};

/// Monte-Carlo estimate of E int_0^H exp(-delta t) z(W(t)) dt with z the
/// optimal value of the workload split at W.
inline LowerBoundResult lower_bound(const NetworkSpec& spec, const LowerBoundOptions& opt) {
  if (opt.replications < 1) throw Error(ErrorCode::InvalidNetwork, "replications must be >= 1");
  const DiffusionData d = build_diffusion(spec, opt.scale, opt.theta);
  const SplitProblem base = make_split_problem(spec);
  std::vector<double> value(opt.replications), tail(opt.replications);
  parallel_for(opt.replications, opt.threads, [&](long k) {
    SplitProblem p = base;
    const SrbmPath path = simulate_srbm(d, opt.horizon, opt.dt, replication_seed(opt.seed, k));
    auto z_at = [&](const Eigen::VectorXd& w) {
      for (int a = 0; a < p.rows(); ++a) p.workload[a] = std::max(0.0, w[a]);
      const SplitSolution s = split(p);
      if (s.status != SplitStatus::optimal) throw Error(ErrorCode::Infeasible, "workload split infeasible");
      return s.z;
    };
    double acc = 0.0, prev = z_at(path.w[0]);
    for (std::size_t s = 1; s < path.w.size(); ++s) {
      const double cur = z_at(path.w[s]);
      const double t0 = (s - 1) * path.dt, t1 = s * path.dt;
      acc += 0.5 * (std::exp(-opt.discount * t0) * prev + std::exp(-opt.discount * t1) * cur) * path.dt;
      prev = cur;
    }
    value[k] = acc;
    const double t_end = (path.w.size() - 1) * path.dt;
    tail[k] = opt.discount > 0 ? std::exp(-opt.discount * t_end) * prev / opt.discount : 0.0;
  });
  LowerBoundResult r;
  r.replications = opt.replications;
  double sum = 0.0, sum_tail = 0.0;
  for (int k = 0; k < opt.replications; ++k) {
    sum += value[k];
    sum_tail += tail[k];
  }
  r.estimate = sum / opt.replications;
  r.tail_bound = sum_tail / opt.replications;
  if (opt.replications > 1) {
    double ss = 0.0;
    for (double v : value) ss += (v - r.estimate) * (v - r.estimate);
    r.std_error = std::sqrt(ss / (opt.replications - 1) / opt.replications);
  }
  return r;
}

}  // namespace collab
