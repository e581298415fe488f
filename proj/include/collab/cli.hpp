#pragma once

// The collab_sched command line. Kept in a header so tests can drive it
// in-process with their own streams.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "collab/experiment.hpp"

namespace collab {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitInvalid = 2, kExitUnstable = 3 };

struct CliGlobals {
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  bool fail_on_unstable = false;
};

namespace detail {

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw Error(ErrorCode::ParseError, "cannot write " + path);
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

inline void emit(const json& doc, const CliGlobals& g, std::ostream& out) {
  Output o(g.out, out);
  o.stream() << doc.dump(2) << '\n';
}

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidNetwork:
      return kExitInvalid;
    default:
      return kExitFailure;
  }
}

inline std::vector<long> workload_queue(const std::vector<double>& v) {
  std::vector<long> out;
  for (double x : v) {
    if (x < 0 || x != std::floor(x)) throw Error(ErrorCode::ParseError, "queue entries must be nonnegative integers");
    out.push_back(static_cast<long>(x));
  }
  return out;
}

}  // namespace detail

inline int cmd_analyze(const std::string& path, const CliGlobals& g, std::ostream& out) {
  const NetworkSpec spec = load_network(path);
  const auto violations = validate(spec);
  json doc;
  doc["valid"] = !has_errors(violations);
  doc["violations"] = to_json(violations);
  if (!has_errors(violations)) doc["report"] = to_json(analyze_architecture(spec));
  detail::emit(doc, g, out);
  return has_errors(violations) ? kExitInvalid : kExitOk;
}

inline int cmd_hypothetical(const std::string& path, const CliGlobals& g, std::ostream& out) {
  const NetworkSpec spec = load_network(path);
  detail::require_valid(spec);
  const NetworkSpec hyp = hypothetical_network(spec);
  json z = json::array();
  for (ResourceMask m : forced_idle_sets(spec)) {
    std::vector<int> set;
    for (int i = 0; i < spec.num_resources; ++i)
      if (m & bit(i)) set.push_back(i);
    z.push_back(set);
  }
  json doc;
  doc["forced_idle"] = z;
  doc["original_hierarchical"] = is_hierarchical(spec);
  doc["hierarchical"] = is_hierarchical(hyp);
  doc["identical"] = to_json(hyp) == to_json(spec);
  doc["network"] = to_json(hyp);
  detail::emit(doc, g, out);
  return kExitOk;
}

inline int cmd_split(const std::string& path, const std::vector<double>& workload_arg,
                     const std::vector<double>& queue_arg, const CliGlobals& g, std::ostream& out) {
  const NetworkSpec spec = load_network(path);
  detail::require_valid(spec);
  SplitProblem p = make_split_problem(spec);
  if (!queue_arg.empty()) {
    if (static_cast<int>(queue_arg.size()) != spec.num_job_types())
      throw Error(ErrorCode::ParseError, "--queue needs one entry per job type");
    const auto w = workload(spec, detail::workload_queue(queue_arg));
    for (int a = 0; a < p.rows(); ++a) p.workload[a] = w[p.heavy_resources[a]];
  } else {
    if (static_cast<int>(workload_arg.size()) != p.rows())
      throw Error(ErrorCode::ParseError, "--workload needs one entry per heavy resource");
    p.workload = workload_arg;
  }
  const SplitSolution s = split(p);
  json doc;
  doc["heavy_resources"] = p.heavy_resources;
  doc["heavy_job_types"] = p.heavy_job_types;
  doc["workload"] = p.workload;
  doc["status"] = s.status == SplitStatus::optimal ? "optimal" : "infeasible";
  if (s.status == SplitStatus::optimal) {
    doc["z"] = s.z;
    doc["q_star"] = s.q_star;
  }
  detail::emit(doc, g, out);
  return s.status == SplitStatus::optimal ? kExitOk : kExitFailure;
}

inline int cmd_simulate(const std::string& path, const std::string& trace_path, const CliGlobals& g,
                        std::ostream& out) {
  RunConfig c = load_run_config(path);
  if (g.seed) c.seed = *g.seed;
  const RunOptions opt = c.options();
  const ReplicatedResult res = run_replications(c.network, c.policy, opt, c.replications, resolve_threads(g.threads));
  json doc;
  doc["config_hash"] = config_hash(c.resolved);
  doc["policy"] = c.policy;
  doc["seed"] = c.seed;
  doc["result"] = to_json(res);
  detail::emit(doc, g, out);
  if (!trace_path.empty() && !res.runs.empty()) {
    std::ofstream t(trace_path);
    if (!t) throw Error(ErrorCode::ParseError, "cannot write " + trace_path);
    t.precision(12);
    write_trace_csv(t, c.network, res.runs.front().trace);
  }
  return g.fail_on_unstable && res.unstable ? kExitUnstable : kExitOk;
}

inline int cmd_sweep(const std::string& path, const CliGlobals& g, std::ostream& out) {
  SweepConfig c = load_sweep_config(path);
  if (g.seed) c.seed = *g.seed;
  c.resolved["seed"] = c.seed;
  const auto rows = run_sweep(c, resolve_threads(g.threads));
  detail::Output o(g.out, out);
  write_sweep_csv(o.stream(), rows, config_hash(c.resolved));
  const bool any_unstable = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.unstable; });
  return g.fail_on_unstable && any_unstable ? kExitUnstable : kExitOk;
}

inline int cmd_lowerbound(const std::string& path, LowerBoundOptions opt, const CliGlobals& g, std::ostream& out) {
  const NetworkSpec spec = load_network(path);
  detail::require_valid(spec);
  if (g.seed) opt.seed = *g.seed;
  opt.threads = resolve_threads(g.threads);
  const LowerBoundResult r = lower_bound(spec, opt);
  json echo = {{"network", to_json(spec)},        {"r", opt.scale},     {"delta", opt.discount},
               {"dt", opt.dt},                   {"horizon", opt.horizon}, {"replications", opt.replications},
               {"seed", opt.seed}};
  if (opt.theta) echo["theta"] = *opt.theta;
  json doc = {{"estimate", r.estimate}, {"stderr", r.std_error}, {"tail_bound", r.tail_bound}, {"config_echo", echo}};
  doc["config_echo"]["hash"] = config_hash(echo);
  detail::emit(doc, g, out);
  return kExitOk;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Scheduling policies for parallel networks with resource collaboration", "collab_sched"};
  app.require_subcommand(1);
  CliGlobals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--out", g.out, "Write the primary output here instead of stdout");
  app.add_option("--threads", g.threads, "Worker threads (default: COLLAB_SCHED_THREADS or all cores)");
  app.add_flag("--fail-on-unstable", g.fail_on_unstable, "Exit with code 3 when a run is flagged unstable");

  std::string network, config, trace;
  std::vector<double> workload_arg, queue_arg;
  LowerBoundOptions lb;

  auto* analyze = app.add_subcommand("analyze", "Validate a network and report its architecture");
  analyze->add_option("network", network, "Network JSON")->required();
  auto* hyp = app.add_subcommand("hypothetical", "Build the hypothetical network");
  hyp->add_option("network", network, "Network JSON")->required();
  auto* split_cmd = app.add_subcommand("split", "Solve the workload split");
  split_cmd->add_option("network", network, "Network JSON")->required();
  split_cmd->add_option("--workload", workload_arg, "Workload per heavy resource")->delimiter(',');
  split_cmd->add_option("--queue", queue_arg, "Queue length per job type (sets the workload)")->delimiter(',');
  auto* simulate = app.add_subcommand("simulate", "Run a simulation config");
  simulate->add_option("config", config, "Run config JSON")->required();
  simulate->add_option("--trace", trace, "Trace CSV of the first replication");
  auto* sweep = app.add_subcommand("sweep", "Run a sweep config and write CSV");
  sweep->add_option("config", config, "Sweep config JSON")->required();
  auto* lbc = app.add_subcommand("lowerbound", "Estimate the diffusion lower bound");
  lbc->add_option("network", network, "Network JSON")->required();
  lbc->add_option("--r", lb.scale, "Scale r");
  lbc->add_option("--delta", lb.discount, "Discount rate");
  lbc->add_option("--dt", lb.dt, "Time step");
  lbc->add_option("--horizon", lb.horizon, "Horizon (default 10/delta)");
  lbc->add_option("--replications", lb.replications, "Path replications");
  std::vector<double> theta;
  auto* theta_opt = lbc->add_option("--theta", theta, "Explicit drift per heavy resource")->delimiter(',');

  for (auto* sub : {analyze, hyp, split_cmd, simulate, sweep, lbc}) sub->fallthrough();

  bool horizon_given = false;
  try {
    app.parse(argc, argv);
    horizon_given = lbc->count("--horizon") > 0;
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitOk : kExitInvalid;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*analyze) return cmd_analyze(network, g, out);
    if (*hyp) return cmd_hypothetical(network, g, out);
    if (*split_cmd) {
      if (workload_arg.empty() == queue_arg.empty()) {
        err << "split: give exactly one of --workload or --queue\n";
        return kExitInvalid;
      }
      return cmd_split(network, workload_arg, queue_arg, g, out);
    }
    if (*simulate) return cmd_simulate(config, trace, g, out);
    if (*sweep) return cmd_sweep(config, g, out);
    if (*lbc) {
      if (!horizon_given) lb.horizon = 10.0 / lb.discount;
      if (theta_opt->count() > 0) lb.theta = theta;
      return cmd_lowerbound(network, lb, g, out);
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return detail::exit_code_for(e);
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace collab
