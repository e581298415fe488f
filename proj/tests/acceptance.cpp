// Acceptance runs. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "collab/collab.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace collab;
using namespace collab::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;
long wc_violations = 0;  // accumulated over every work-conserving acceptance run
long wc_runs = 0;

void report(int id, const std::string& title, const Outcome& o) {
  std::printf("%s criterion %d: %s (%s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void audit(const ReplicatedResult& r) {
  wc_violations += r.wc_violations;
  wc_runs += static_cast<long>(r.runs.size());
}

int threads() { return resolve_threads(0); }

// ---------------------------------------------------------------------------

Outcome ranking() {
  const auto t0 = Clock::now();
  RunOptions opt;
  opt.warmup = 2e4;
  opt.horizon = 2e4 + 2e5;
  opt.seed = 2024;
  bool ok = true;
  std::string detail;
  for (double lambda : {0.6, 0.7, 0.75}) {
    const auto s = two_resource(lambda, 2.0);
    const auto prop = run_replications(s, "proposed", opt, 10, threads());
    const auto gvm = run_replications(s, "gvm", opt, 10, threads());
    const auto mp = run_replications(s, "mp", opt, 10, threads());
    audit(prop);
    audit(gvm);
    const auto& a = prop.mean_jobs;
    ok &= a.mean < gvm.mean_jobs.mean && a.mean < mp.mean_jobs.mean;
    if (lambda >= 0.7) {
      for (const auto* other : {&gvm.mean_jobs, &mp.mean_jobs})
        ok &= a.mean + a.ci_halfwidth < other->mean - other->ci_halfwidth;
    }
    detail += fmt("lambda %.2f: proposed %.3f+-%.3f gvm %.3f+-%.3f mp %.3f+-%.3f; ", lambda, a.mean, a.ci_halfwidth,
                  gvm.mean_jobs.mean, gvm.mean_jobs.ci_halfwidth, mp.mean_jobs.mean, mp.mean_jobs.ci_halfwidth);
  }
  const double secs = seconds_since(t0);
  ok &= secs < 300;
  return {ok, detail + fmt("%.0f s", secs)};
}

Outcome pia_stability() {
  const auto t0 = Clock::now();
  RunOptions opt;
  opt.warmup = 2e4;
  opt.horizon = 2e4 + 2e5;
  opt.seed = 77;
  const auto low = run_replications(two_resource(0.70, 2.0), "pia", opt, 5, threads());
  const auto high = run_replications(two_resource(0.85, 2.0), "pia", opt, 5, threads());
  const double secs = seconds_since(t0);
  const bool ok = !low.unstable && high.unstable && secs < 120;
  return {ok, fmt("lambda 0.70 flagged %s (mean %.2f), lambda 0.85 flagged %s (mean %.1f), %.0f s",
                  low.unstable ? "yes" : "no", low.mean_jobs.mean, high.unstable ? "yes" : "no",
                  high.mean_jobs.mean, secs)};
}

Outcome pht_one_is_gvm() {
  RunOptions opt;
  opt.horizon = 1e12;
  opt.stop_after_events = 100000;
  opt.seed = 5;
  const auto s = two_resource(0.75, 2.0);
  auto path = [&](const std::string& policy) {
    std::vector<std::vector<bool>> out;
    run(s, policy, opt, [&](const EventRecord& r) {
      std::vector<bool> x;
      for (int j = 0; j < r.x.size(); ++j) x.push_back(r.x[j]);
      out.push_back(std::move(x));
    });
    return out;
  };
  const auto a = path("pht:1"), b = path("gvm");
  long first_diff = -1;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k)
    if (a[k] != b[k]) {
      first_diff = static_cast<long>(k);
      break;
    }
  const bool ok = a.size() == 100000 && a == b;
  return {ok, fmt("%zu vs %zu events, first difference at %ld", a.size(), b.size(), first_diff)};
}

Outcome hypothetical_paths() {
  RunOptions opt;
  opt.horizon = 1e12;
  opt.stop_after_events = 100000;
  opt.seed = 9;
  const auto s = triangle();
  const auto r = run_coupled(s, hypothetical_network(s), "proposed", opt);
  wc_violations += r.a.wc_violations + r.b.wc_violations;
  wc_runs += 2;
  const bool ok = r.paths_equal && r.events_compared == 100000 && r.a.events == r.b.events;
  return {ok, fmt("%ld events compared, paths %s", r.events_compared, r.paths_equal ? "identical" : "differ")};
}

Outcome mm1() {
  RunOptions opt;
  opt.horizon = 5e6;
  opt.warmup = 1e4;
  opt.seed = 31;
  const auto r = run_replications(single(1.6, 2.0), "proposed", opt, 5, threads());
  audit(r);
  const double m = r.mean_jobs.mean;
  return {std::abs(m - 4.0) <= 0.10, fmt("mean %.4f over 5 replications, ci %.4f", m, r.mean_jobs.ci_halfwidth)};
}

Outcome solver_oracle() {
  std::mt19937_64 rng(606);
  SolverOptions rev;
  rev.reverse_pivot_order = true;
  int lp_bad = 0, qp_bad = 0, cf_bad = 0, cf_checked = 0;
  double lp_err = 0, qp_err = 0, cf_err = 0;
  for (int n = 0; n < 500; ++n) {
    const int a1 = 1 + n % 3, a2 = std::max(a1, 1 + (n / 3) % 6);
    const auto p = random_split_problem(rng, a1, a2, n % 2 == 0);
    const auto oracle = brute_force_lp_value(p);
    const auto lp = solve_lp(p);
    const double e = oracle ? std::abs(lp.z - *oracle) / std::max(1.0, std::abs(*oracle)) : 1.0;
    lp_err = std::max(lp_err, e);
    lp_bad += !(e <= 1e-8);

    const auto lp2 = solve_lp(p, rev);
    const auto qa = solve_qp_min_norm(p, lp.z, lp.q);
    const auto qb = solve_qp_min_norm(p, lp.z, lp2.q);
    double d = 0.0;
    for (int c = 0; c < p.cols(); ++c) d = std::max(d, std::abs(qa.q_star[c] - qb.q_star[c]));
    qp_err = std::max(qp_err, d);
    qp_bad += !(d <= 1e-8);

    if (const auto fast = split_closed_form(p)) {
      ++cf_checked;
      const auto general = split_general(p);
      double c_err = std::abs(fast->z - general.z) / std::max(1.0, std::abs(general.z));
      for (int c = 0; c < p.cols(); ++c) c_err = std::max(c_err, std::abs(fast->q_star[c] - general.q_star[c]));
      cf_err = std::max(cf_err, c_err);
      cf_bad += !(c_err <= 1e-9);
    }
  }
  const bool ok = lp_bad == 0 && qp_bad == 0 && cf_bad == 0 && cf_checked > 0;
  return {ok, fmt("lp max err %.1e (%d bad), qp start spread %.1e (%d bad), closed form %d checked max err %.1e (%d bad)",
                  lp_err, lp_bad, qp_err, qp_bad, cf_checked, cf_err, cf_bad)};
}

Outcome lipschitz() {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> amount(0.0, 4.0);
  std::vector<SplitProblem> problems{make_split_problem(two_resource(0.9, 2.0)),
                                     make_split_problem(two_resource(0.9, 2.0, {3, 1, 1}))};
  for (int n = 0; n < 18; ++n) problems.push_back(random_split_problem(rng, 1 + n % 3, 2 + n % 5, n % 2 == 0));
  int breaches = 0;
  double worst = 0.0;
  for (auto p : problems) {
    auto sample_w = [&] {
      Eigen::VectorXd q0(p.cols());
      for (int c = 0; c < p.cols(); ++c) q0(c) = amount(rng);
      const Eigen::VectorXd w = p.D * q0;
      return std::vector<double>(w.data(), w.data() + p.rows());
    };
    auto ratios = [&] {
      double rz = 0.0, rq = 0.0;
      for (int k = 0; k < 200; ++k) {
        const auto w1 = sample_w(), w2 = sample_w();
        double dw = 0.0;
        for (int r = 0; r < p.rows(); ++r) dw = std::max(dw, std::abs(w1[r] - w2[r]));
        if (dw == 0.0) continue;
        p.workload = w1;
        const auto s1 = split(p);
        p.workload = w2;
        const auto s2 = split(p);
        double dq = 0.0;
        for (int c = 0; c < p.cols(); ++c) dq = std::max(dq, std::abs(s1.q_star[c] - s2.q_star[c]));
        rz = std::max(rz, std::abs(s1.z - s2.z) / dw);
        rq = std::max(rq, dq / dw);
      }
      return std::pair{rz, rq};
    };
    const auto [cz, cq] = ratios();
    const auto [tz, tq] = ratios();
    breaches += (tz > 1.5 * cz) + (tq > 1.5 * cq);
    worst = std::max({worst, cz > 0 ? tz / cz : 0.0, cq > 0 ? tq / cq : 0.0});
  }
  return {breaches == 0, fmt("%zu problems, worst test/calibration ratio %.3f, %d breaches", problems.size(), worst,
                             breaches)};
}

Outcome lower_bound_gap() {
  const auto t0 = Clock::now();
  const double r = 10.0, delta = 1.0;
  const auto s = two_resource(0.9, 2.0);
  LowerBoundOptions lb;
  lb.scale = r;
  lb.discount = delta;
  lb.horizon = 10.0 / delta;
  lb.dt = 1e-3;
  lb.replications = 1000;
  lb.seed = 808;
  lb.threads = threads();
  const auto bound = lower_bound(s, lb);

  // the diffusion-scaled cost is r^-3 times the real cost at rate delta / r^2
  RunOptions opt;
  opt.horizon = lb.horizon * r * r;
  opt.discount = delta / (r * r);
  opt.seed = 809;
  auto scaled = [&](const std::string& policy) {
    const auto res = run_replications(s, policy, opt, 2000, threads());
    audit(res);
    const double k = 1.0 / (r * r * r);
    return std::pair{res.discounted_cost.mean * k, res.discounted_cost.std_error * k};
  };
  const auto [prop, prop_se] = scaled("proposed");
  const auto [gvm, gvm_se] = scaled("gvm");
  const double se = std::hypot(bound.std_error, prop_se);
  const bool above = prop > bound.estimate - 3 * se;
  const bool close = std::abs(prop - bound.estimate) <= 0.25 * bound.estimate;
  const bool order = gvm - bound.estimate > prop - bound.estimate;
  const double secs = seconds_since(t0);
  const bool ok = above && close && order && secs < 600;
  return {ok, fmt("bound %.4f+-%.4f, proposed %.4f+-%.4f (%.1f%% above), gvm %.4f+-%.4f, %.0f s", bound.estimate,
                  bound.std_error, prop, prop_se, 100 * (prop / bound.estimate - 1), gvm, gvm_se, secs)};
}

Outcome allocation_dominance() {
  std::mt19937_64 rng(909);
  std::uniform_int_distribution<long> len(0, 4);
  std::bernoulli_distribution empty(0.3), drop(0.25);
  long states = 0, compared = 0, violations = 0;
  for (int net = 0; net < 5; ++net) {
    const auto spec = random_hierarchical(rng, 3 + net);
    const CollaborationStructure st(spec);
    const int J = spec.num_job_types();
    for (int k = 0; k < 1000; ++k) {
      std::vector<long> q(J), targets(J);
      for (int j = 0; j < J; ++j) {
        q[j] = empty(rng) ? 0 : len(rng);
        targets[j] = len(rng);
      }
      const auto x = allocate_definition3(st, q, targets);
      if (!is_work_conserving(st, x, q)) ++violations;
      const IndexPair mine = index_pair(st, x, q, targets);
      ++states;
      std::vector<int> order(J);
      for (int j = 0; j < J; ++j) order[j] = j;
      int found = 0;
      for (int attempt = 0; attempt < 50000 && found < 1000; ++attempt) {
        std::shuffle(order.begin(), order.end(), rng);
        AllocationVector y(J);
        ResourceMask used = 0;
        for (int j : order) {
          if (q[j] == 0 || (used & st.mask(j)) || drop(rng)) continue;
          y.set(j);
          used |= st.mask(j);
        }
        if (!is_work_conserving(st, y, q)) continue;
        ++found;
        ++compared;
        if (!dominates(mine, index_pair(st, y, q, targets))) ++violations;
      }
    }
  }
  return {violations == 0 && compared > 0,
          fmt("%ld states, %ld comparisons, %ld violations", states, compared, violations)};
}

}  // namespace

int main() {
  std::printf("acceptance runs with %d thread(s)\n", threads());
  report(1, "proposed ranks below GVM and MP on the two-resource network", ranking());
  report(2, "PIA stability flag", pia_stability());
  report(3, "PHT with threshold 1 follows the GVM allocation path", pht_one_is_gvm());
  report(4, "triangle network and its hypothetical network share queue paths", hypothetical_paths());
  report(5, "M/M/1 time-average number of jobs", mm1());
  report(6, "workload split solver against enumeration oracles", solver_oracle());
  report(7, "Lipschitz behaviour of z and q*", lipschitz());
  report(8, "diffusion lower bound against simulated costs", lower_bound_gap());
  report(9, "allocation rule dominance over random admissible allocations", allocation_dominance());
  report(10, "work-conservation audit", {wc_violations == 0, fmt("%ld violations over %ld runs", wc_violations, wc_runs)});
  return failures == 0 ? 0 : 1;
}
