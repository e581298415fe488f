#pragma once

// Run and sweep configuration, replicated runs, and result emission.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "collab/diffusion.hpp"
#include "collab/network_json.hpp"
#include "collab/parallel.hpp"
#include "collab/sim.hpp"

namespace collab {

// ---------------------------------------------------------------------------
// Formatting

/// Shortest round-trip decimal, independent of the locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k, h >>= 4) out[k] = hex[h & 0xF];
  return out;
}

inline std::string config_hash(const json& doc) { return config_hash(doc.dump()); }

// ---------------------------------------------------------------------------
// Configs

namespace detail {

inline NetworkSpec network_field(const json& doc, const std::filesystem::path& base_dir, json& resolved) {
  const auto it = doc.find("network");
  if (it == doc.end()) throw Error(ErrorCode::ParseError, "config needs a 'network' entry");
  NetworkSpec spec;
  if (it->is_string()) {
    std::filesystem::path p = it->get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    spec = load_network(p.string());
  } else {
    spec = network_from_json(*it);
  }
  resolved = to_json(spec);
  return spec;
}

inline void require_valid(const NetworkSpec& spec) {
  const auto vs = validate(spec);
  for (const auto& v : vs)
    if (v.severity == Severity::error) throw Error(ErrorCode::InvalidNetwork, v.message);
}

}  // namespace detail

struct RunConfig {
  NetworkSpec network;
  std::string policy = "proposed";
  double horizon = 1e4;
  double warmup = 0.0;
  double discount = 0.0;
  std::uint64_t seed = 1;
  int replications = 1;
  double trace_sample_dt = 0.0;
  std::vector<long> initial_queue;
  json resolved;  // the config with the network inlined, for hashing

  RunOptions options() const {
    RunOptions o;
    o.horizon = horizon;
    o.warmup = warmup;
    o.discount = discount;
    o.seed = seed;
    o.trace_dt = trace_sample_dt;
    o.initial_queue = initial_queue;
    return o;
  }
};

inline RunConfig run_config_from_json(const json& doc, const std::filesystem::path& base_dir = ".") {
  try {
    RunConfig c;
    json net;
    c.network = detail::network_field(doc, base_dir, net);
    detail::require_valid(c.network);
    c.policy = detail::field_or<std::string>(doc, "policy", c.policy);
    c.horizon = detail::field_or(doc, "horizon", c.horizon);
    c.warmup = detail::field_or(doc, "warmup", c.warmup);
    c.discount = detail::field_or(doc, "discount", c.discount);
    c.seed = detail::field_or<std::uint64_t>(doc, "seed", c.seed);
    c.replications = detail::field_or(doc, "replications", c.replications);
    c.trace_sample_dt = detail::field_or(doc, "trace_sample_dt", c.trace_sample_dt);
    c.initial_queue = detail::field_or(doc, "initial_queue", c.initial_queue);
    if (c.replications < 1) throw Error(ErrorCode::ParseError, "replications must be >= 1");
    c.resolved = doc;
    c.resolved["network"] = net;
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("run config: ") + e.what());
  }
}

inline RunConfig load_run_config(const std::string& path) {
  return run_config_from_json(parse_json_text(read_file(path)), std::filesystem::path(path).parent_path());
}

struct SweepConfig {
  NetworkSpec network;
  std::vector<double> lambdas;
  std::vector<std::string> policies;  // "pht" alone means the threshold grid
  std::vector<double> pht_gammas{0.5, 1.0, 1.5, 2.0};
  int replications = 5;
  double horizon = 1e4;
  double warmup = 0.0;
  double discount = 0.0;
  std::uint64_t seed = 1;
  json resolved;
};

inline SweepConfig sweep_config_from_json(const json& doc, const std::filesystem::path& base_dir = ".") {
  try {
    SweepConfig c;
    json net;
    c.network = detail::network_field(doc, base_dir, net);
    c.lambdas = doc.at("lambdas").get<std::vector<double>>();
    c.policies = doc.at("policies").get<std::vector<std::string>>();
    c.pht_gammas = detail::field_or(doc, "pht_gammas", c.pht_gammas);
    c.replications = detail::field_or(doc, "replications", c.replications);
    c.horizon = detail::field_or(doc, "horizon", c.horizon);
    c.warmup = detail::field_or(doc, "warmup", c.warmup);
    c.discount = detail::field_or(doc, "discount", c.discount);
    c.seed = detail::field_or<std::uint64_t>(doc, "seed", c.seed);
    if (!std::is_sorted(c.lambdas.begin(), c.lambdas.end()))
      throw Error(ErrorCode::ParseError, "sweep lambdas must be sorted ascending");
    if (c.replications < 1) throw Error(ErrorCode::ParseError, "replications must be >= 1");
    c.resolved = doc;
    c.resolved["network"] = net;
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("sweep config: ") + e.what());
  }
}

inline SweepConfig load_sweep_config(const std::string& path) {
  return sweep_config_from_json(parse_json_text(read_file(path)), std::filesystem::path(path).parent_path());
}

/// Every job type arrives at the common rate `lambda`.
inline NetworkSpec with_common_arrival_rate(NetworkSpec spec, double lambda) {
  for (auto& jt : spec.job_types) jt.arrival_rate = lambda;
  return spec;
}

/// PHT thresholds max(1, round(gamma / (1 - lambda))), one per gamma.
inline std::vector<long> pht_thresholds(double lambda, const std::vector<double>& gammas) {
  std::vector<long> out;
  for (double g : gammas) out.push_back(std::max(1L, std::lround(g / (1.0 - lambda))));
  return out;
}

// ---------------------------------------------------------------------------
// Replications

struct Summary {
  double mean = 0.0;
  double ci_halfwidth = 0.0;  // 95%, Student t
  double std_error = 0.0;
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  const double n = static_cast<double>(xs.size());
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= n;
  if (xs.size() < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std_error = std::sqrt(ss / (n - 1) / n);
  boost::math::students_t t(n - 1);
  s.ci_halfwidth = boost::math::quantile(t, 0.975) * s.std_error;
  return s;
}

struct ReplicatedResult {
  std::vector<RunMetrics> runs;
  Summary mean_jobs;
  Summary discounted_cost;
  bool unstable = false;  // a majority of replications flagged
  long wc_violations = 0;
};

inline ReplicatedResult reduce(std::vector<RunMetrics> runs) {
  ReplicatedResult r;
  std::vector<double> jobs, cost;
  int flagged = 0;
  for (const auto& m : runs) {
    jobs.push_back(m.time_avg_jobs_total);
    cost.push_back(m.discounted_holding_cost);
    flagged += m.instability_flag ? 1 : 0;
    r.wc_violations += m.wc_violations;
  }
  r.mean_jobs = summarize(jobs);
  r.discounted_cost = summarize(cost);
  r.unstable = 2 * flagged > static_cast<int>(runs.size());
  r.runs = std::move(runs);
  return r;
}

/// Replication k uses seed replication_seed(opt.seed, k) and a fresh policy.
inline ReplicatedResult run_replications(const NetworkSpec& spec, const std::string& policy, const RunOptions& opt,
                                         int replications, int threads = 1) {
  std::vector<RunMetrics> runs(replications);
  parallel_for(replications, threads, [&](long k) {
    RunOptions o = opt;
    o.seed = replication_seed(opt.seed, static_cast<std::uint64_t>(k));
    runs[k] = run(spec, policy, o);
  });
  return reduce(std::move(runs));
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  double lambda = 0.0;
  std::string policy;
  double mean_jobs = std::numeric_limits<double>::quiet_NaN();
  double ci_halfwidth = std::numeric_limits<double>::quiet_NaN();
  bool unstable = false;
  std::string status = "ok";
};

/// One row per (lambda, policy). The bare name "pht" expands to the threshold
/// grid and reports the best performing threshold. A failing point is marked
/// in `status` and the sweep continues.
inline std::vector<SweepRow> run_sweep(const SweepConfig& c, int threads = 1) {
  struct Task {
    int point;
    int candidate;
    int rep;
  };
  struct Candidate {
    int row;
    std::string policy;
  };
  std::vector<SweepRow> rows;
  std::vector<Candidate> candidates;
  std::vector<NetworkSpec> specs;
  for (double lambda : c.lambdas) {
    specs.push_back(with_common_arrival_rate(c.network, lambda));
    for (const auto& p : c.policies) {
      const int row = static_cast<int>(rows.size());
      rows.push_back(SweepRow{lambda, p});
      if (p == "pht") {
        for (long k : pht_thresholds(lambda, c.pht_gammas)) candidates.push_back({row, "pht:" + std::to_string(k)});
      } else {
        candidates.push_back({row, p});
      }
    }
  }
  const int per_point = static_cast<int>(c.policies.size());
  std::vector<Task> tasks;
  for (int k = 0; k < static_cast<int>(candidates.size()); ++k)
    for (int r = 0; r < c.replications; ++r) tasks.push_back({candidates[k].row / per_point, k, r});

  std::vector<RunMetrics> metrics(tasks.size());
  std::vector<std::string> errors(tasks.size());
  parallel_for(static_cast<long>(tasks.size()), threads, [&](long t) {
    const Task& task = tasks[t];
    RunOptions o;
    o.horizon = c.horizon;
    o.warmup = c.warmup;
    o.discount = c.discount;
    o.seed = replication_seed(c.seed, static_cast<std::uint64_t>(task.rep));
    try {
      metrics[t] = run(specs[task.point], candidates[task.candidate].policy, o);
    } catch (const Error& e) {
      errors[t] = to_string(e.code());
    }
  });

  std::vector<std::optional<ReplicatedResult>> per_candidate(candidates.size());
  std::vector<std::string> candidate_error(candidates.size());
  for (int k = 0; k < static_cast<int>(candidates.size()); ++k) {
    std::vector<RunMetrics> runs;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      if (tasks[t].candidate != k) continue;
      if (!errors[t].empty()) candidate_error[k] = errors[t];
      else runs.push_back(std::move(metrics[t]));
    }
    if (candidate_error[k].empty()) per_candidate[k] = reduce(std::move(runs));
  }
  std::vector<int> best(rows.size(), -1);
  for (int k = 0; k < static_cast<int>(candidates.size()); ++k) {
    const int row = candidates[k].row;
    if (!per_candidate[k]) {
      if (best[row] < 0) rows[row].status = candidate_error[k];
      continue;
    }
    if (best[row] < 0 || per_candidate[k]->mean_jobs.mean < per_candidate[best[row]]->mean_jobs.mean) best[row] = k;
  }
  for (std::size_t row = 0; row < rows.size(); ++row) {
    if (best[row] < 0) continue;
    const auto& res = *per_candidate[best[row]];
    rows[row].policy = candidates[best[row]].policy;
    rows[row].mean_jobs = res.mean_jobs.mean;
    rows[row].ci_halfwidth = res.mean_jobs.ci_halfwidth;
    rows[row].unstable = res.unstable;
    rows[row].status = "ok";
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, const std::string& hash) {
  out << "lambda,policy,mean_jobs,ci_halfwidth,unstable,status,config_hash\n";
  for (const auto& r : rows)
    out << format_number(r.lambda) << ',' << r.policy << ',' << format_number(r.mean_jobs) << ','
        << format_number(r.ci_halfwidth) << ',' << (r.unstable ? "true" : "false") << ',' << r.status << ','
        << hash << '\n';
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const RunMetrics& m) {
  return {
      {"end_time", m.end_time},
      {"warmup", m.warmup},
      {"time_avg_jobs_total", m.time_avg_jobs_total},
      {"time_avg_jobs", m.time_avg_jobs},
      {"discounted_holding_cost", m.discounted_holding_cost},
      {"idle_fraction", m.idle_fraction},
      {"throughput", m.throughput},
      {"arrivals", m.arrivals},
      {"completions", m.completions},
      {"final_queue", m.final_queue},
      {"quarter_avg_jobs", m.quarter_avg_jobs},
      {"instability_flag", m.instability_flag},
      {"events", m.events},
      {"work_conservation_violations", m.wc_violations},
  };
}

inline json to_json(const Summary& s) {
  return {{"mean", s.mean}, {"ci_halfwidth", s.ci_halfwidth}, {"std_error", s.std_error}};
}

inline json to_json(const ReplicatedResult& r) {
  json runs = json::array();
  for (const auto& m : r.runs) runs.push_back(to_json(m));
  return {
      {"mean_jobs", to_json(r.mean_jobs)},
      {"discounted_cost", to_json(r.discounted_cost)},
      {"unstable", r.unstable},
      {"work_conservation_violations", r.wc_violations},
      {"replications", runs},
  };
}

}  // namespace collab
