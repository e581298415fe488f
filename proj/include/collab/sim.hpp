#pragma once

// Discrete-event simulation of a parallel network under a policy.
//
// The calendar has one slot per job type for its next arrival, one per job
// type for the completion of its head-of-line job (armed iff the type is in
// service) and one for the review event a policy may request. Simultaneous
// events are taken completions first, then arrivals, then the review, each
// group by ascending job type.

#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "collab/allocation.hpp"
#include "collab/error.hpp"
#include "collab/network.hpp"
#include "collab/policies.hpp"
#include "collab/random.hpp"

namespace collab {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct RunOptions {
  double horizon = 1e4;
  double warmup = 0.0;
  double discount = 0.0;
  std::uint64_t seed = 1;
  long max_events = 2'000'000'000;  // exceeding it raises EventOverflow
  long stop_after_events = -1;      // end the run cleanly after this many events
  double trace_dt = 0.0;            // > 0: sample the state on this grid
  std::vector<long> initial_queue;  // empty: start with every buffer empty
};

struct TracePoint {
  double t = 0.0;
  std::vector<long> q;
  std::vector<double> w;
  ResourceMask busy = 0;
};

struct EventRecord {
  double clock;
  EventKind kind;
  int job_type;
  std::span<const long> q;
  const AllocationVector& x;
};

using Observer = std::function<void(const EventRecord&)>;

struct RunMetrics {
  double end_time = 0.0;
  double warmup = 0.0;
  double time_avg_jobs_total = 0.0;           // over [warmup, end_time]
  std::vector<double> time_avg_jobs;
  double discounted_holding_cost = 0.0;       // over [0, end_time]
  std::vector<double> idle_fraction;          // over [warmup, end_time]
  std::vector<double> throughput;             // completions / end_time
  std::vector<long> arrivals;
  std::vector<long> completions;
  std::vector<long> initial_queue;
  std::vector<long> final_queue;
  std::vector<double> busy_time;              // T_j over [0, end_time]
  std::vector<double> idle_time;              // Idle_i over [0, end_time]
  std::array<double, 4> quarter_avg_jobs{};   // the window split in four
  bool instability_flag = false;
  long events = 0;
  long wc_violations = 0;                     // events leaving a heavy resource with work idle
  std::vector<TracePoint> trace;
};

/// Divergence heuristic on the quarter averages: the last quarter exceeds
/// 1.5 times the second plus ten jobs.
inline bool looks_unstable(const std::array<double, 4>& quarters) {
  return quarters[3] > 1.5 * quarters[1] + 10.0;
}

class Engine {
 public:
  Engine(const NetworkSpec& spec, Policy& policy, RunOptions opt)
      : spec_(spec), policy_(policy), opt_(std::move(opt)), st_(spec), plan_(policy.planning_network()),
        J_(spec.num_job_types()), I_(spec.num_resources) {
    if (!(opt_.horizon > opt_.warmup) || opt_.warmup < 0)
      throw Error(ErrorCode::InvalidNetwork, "run needs horizon > warmup >= 0");
    if (plan_.num_job_types() != J_)
      throw Error(ErrorCode::PolicyError, "planning network has a different number of job types");
  }

  void set_observer(Observer obs) { observer_ = std::move(obs); }

  RunMetrics run() {
    init();
    handle(EventInfo{EventKind::start, -1, 0});
    while (true) {
      if (opt_.stop_after_events >= 0 && m_.events >= opt_.stop_after_events) break;
      const auto [slot, t] = next_event();
      if (t > opt_.horizon) {
        advance(opt_.horizon);
        break;
      }
      advance(t);
      EventInfo ev;
      if (slot < J_) {
        complete(slot);
        ev = {EventKind::completion, slot, 0};
      } else if (slot < 2 * J_) {
        arrive(slot - J_);
        ev = {EventKind::arrival, slot - J_, 0};
      } else {
        review_time_ = kNever;
        ev = {EventKind::review, -1, review_tag_};
      }
      handle(ev);
    }
    return finish();
  }

 private:
  void init() {
    clock_ = 0.0;
    q_.assign(J_, 0);
    if (!opt_.initial_queue.empty()) {
      if (static_cast<int>(opt_.initial_queue.size()) != J_)
        throw Error(ErrorCode::InvalidNetwork, "initial_queue needs one entry per job type");
      q_ = opt_.initial_queue;
    }
    x_ = AllocationVector(J_);
    jobs_.assign(J_, {});
    arrival_rng_.clear();
    service_rng_.clear();
    inter_.clear();
    service_.clear();
    next_arrival_.assign(J_, kNever);
    completion_.assign(J_, kNever);
    for (int j = 0; j < J_; ++j) {
      arrival_rng_.emplace_back(opt_.seed, StreamRole::arrival, j);
      service_rng_.emplace_back(opt_.seed, StreamRole::service, j);
      inter_.push_back(interarrival_sampler(spec_.job_types[j]));
      service_.push_back(service_sampler(spec_.job_types[j]));
      if (q_[j] < 0) throw Error(ErrorCode::InvalidNetwork, "initial queue must be >= 0");
      for (long k = 0; k < q_[j]; ++k) jobs_[j].push_back(service_[j](service_rng_[j]));
      if (spec_.job_types[j].arrival_rate > 0) next_arrival_[j] = inter_[j](arrival_rng_[j]);
    }
    review_time_ = kNever;
    review_tag_ = 0;
    holding_.clear();
    for (const auto& jt : spec_.job_types) holding_.push_back(jt.holding_cost);
    res_masks_.clear();
    for (int j = 0; j < J_; ++j) res_masks_.push_back(spec_.resource_mask(j));
    plan_masks_.clear();
    for (int j = 0; j < J_; ++j) plan_masks_.push_back(plan_.resource_mask(j));
    plan_heavy_ = heavy_mask(plan_);

    m_ = RunMetrics{};
    m_.warmup = opt_.warmup;
    m_.initial_queue = q_;
    m_.time_avg_jobs.assign(J_, 0.0);
    m_.idle_fraction.assign(I_, 0.0);
    m_.arrivals.assign(J_, 0);
    m_.completions.assign(J_, 0);
    m_.busy_time.assign(J_, 0.0);
    m_.idle_time.assign(I_, 0.0);
    quarter_len_ = (opt_.horizon - opt_.warmup) / 4.0;
    next_sample_ = opt_.trace_dt > 0 ? 0.0 : kNever;
  }

  std::pair<int, double> next_event() const {
    int slot = 2 * J_;
    double t = review_time_;
    // strict comparison, scanning backwards, keeps the lowest slot on ties
    for (int j = J_ - 1; j >= 0; --j)
      if (next_arrival_[j] <= t) {
        t = next_arrival_[j];
        slot = J_ + j;
      }
    for (int j = J_ - 1; j >= 0; --j)
      if (completion_[j] <= t) {
        t = completion_[j];
        slot = j;
      }
    return {slot, t};
  }

  ResourceMask busy_mask() const {
    ResourceMask m = 0;
    for (int j = 0; j < J_; ++j)
      if (x_[j]) m |= res_masks_[j];
    return m;
  }

  void record_sample(double t) {
    TracePoint p;
    p.t = t;
    p.q = q_;
    p.w = workload(spec_, q_);
    p.busy = busy_mask();
    m_.trace.push_back(std::move(p));
  }

  /// Integrate the piecewise-constant state over [clock_, t].
  void advance(double t) {
    const double a = clock_, b = t;
    while (next_sample_ < b) {
      record_sample(next_sample_);
      next_sample_ += opt_.trace_dt;
    }
    if (b > a) {
      const double dt = b - a;
      long total = 0;
      double cost_rate = 0.0;
      for (int j = 0; j < J_; ++j) {
        total += q_[j];
        cost_rate += holding_[j] * static_cast<double>(q_[j]);
        if (x_[j]) m_.busy_time[j] += dt;
      }
      const ResourceMask busy = busy_mask();
      for (int i = 0; i < I_; ++i)
        if (!(busy & bit(i))) m_.idle_time[i] += dt;

      const double d = opt_.discount;
      if (cost_rate != 0.0)
        m_.discounted_holding_cost += cost_rate * (d > 0 ? (std::exp(-d * a) - std::exp(-d * b)) / d : dt);

      const double lo = std::max(a, opt_.warmup);
      if (b > lo) {
        const double w = b - lo;
        for (int j = 0; j < J_; ++j) m_.time_avg_jobs[j] += static_cast<double>(q_[j]) * w;
        for (int i = 0; i < I_; ++i)
          if (!(busy & bit(i))) m_.idle_fraction[i] += w;
        if (total > 0) {
          for (int k = 0; k < 4; ++k) {
            const double q0 = opt_.warmup + k * quarter_len_;
            const double overlap = std::min(b, q0 + quarter_len_) - std::max(lo, q0);
            if (overlap > 0) m_.quarter_avg_jobs[k] += static_cast<double>(total) * overlap;
          }
        }
      }
    }
    clock_ = b;
  }

  void complete(int j) {
    --q_[j];
    jobs_[j].pop_front();
    ++m_.completions[j];
    x_.set(j, false);
    completion_[j] = kNever;
  }

  void arrive(int j) {
    ++q_[j];
    jobs_[j].push_back(service_[j](service_rng_[j]));
    ++m_.arrivals[j];
    next_arrival_[j] = clock_ + inter_[j](arrival_rng_[j]);
  }

  void handle(const EventInfo& ev) {
    const SimView view{clock_, q_, &x_};
    Decision d = policy_.on_event(view, ev);
    apply(d);
    if (d.review_at) {
      review_time_ = std::max(*d.review_at, clock_);
      review_tag_ = d.review_tag;
    }
    audit();
    ++m_.events;
    if (observer_) observer_(EventRecord{clock_, ev.kind, ev.job_type, q_, x_});
    if (m_.events > opt_.max_events) throw Error(ErrorCode::EventOverflow, "event cap exceeded");
  }

  void apply(const Decision& d) {
    if (d.x.size() != J_) throw Error(ErrorCode::PolicyError, policy_.name() + " returned a malformed allocation");
    ResourceMask used = 0;
    for (int j = 0; j < J_; ++j) {
      if (!d.x[j]) continue;
      if (q_[j] <= 0) throw Error(ErrorCode::PolicyError, policy_.name() + " served an empty buffer");
      if (used & res_masks_[j]) throw Error(ErrorCode::PolicyError, policy_.name() + " shared a resource");
      used |= res_masks_[j];
    }
    for (int j = 0; j < J_; ++j) {
      if (x_[j] && !d.x[j]) {
        jobs_[j].front() = std::max(0.0, completion_[j] - clock_);
        completion_[j] = kNever;
      } else if (!x_[j] && d.x[j]) {
        completion_[j] = clock_ + jobs_[j].front();
      }
    }
    x_ = d.x;
  }

  void audit() {
    ResourceMask pending = 0, busy = 0;
    for (int j = 0; j < J_; ++j) {
      if (q_[j] > 0) pending |= plan_masks_[j];
      if (x_[j]) busy |= plan_masks_[j];
    }
    const ResourceMask need = pending & plan_heavy_;
    if ((busy & need) != need) ++m_.wc_violations;
  }

  RunMetrics finish() {
    if (opt_.trace_dt > 0 && next_sample_ <= clock_) record_sample(clock_);
    m_.end_time = clock_;
    const double window = clock_ - opt_.warmup;
    double total = 0.0;
    for (int j = 0; j < J_; ++j) {
      m_.time_avg_jobs[j] = window > 0 ? m_.time_avg_jobs[j] / window : 0.0;
      total += m_.time_avg_jobs[j];
    }
    m_.time_avg_jobs_total = total;
    for (int i = 0; i < I_; ++i) m_.idle_fraction[i] = window > 0 ? m_.idle_fraction[i] / window : 0.0;
    for (auto& v : m_.quarter_avg_jobs) v = quarter_len_ > 0 ? v / quarter_len_ : 0.0;
    m_.throughput.assign(J_, 0.0);
    for (int j = 0; j < J_; ++j)
      m_.throughput[j] = clock_ > 0 ? static_cast<double>(m_.completions[j]) / clock_ : 0.0;
    m_.final_queue = q_;
    m_.instability_flag = looks_unstable(m_.quarter_avg_jobs);
    return std::move(m_);
  }

  const NetworkSpec& spec_;
  Policy& policy_;
  RunOptions opt_;
  CollaborationStructure st_;
  const NetworkSpec& plan_;
  int J_;
  int I_;
  Observer observer_;

  double clock_ = 0.0;
  QueueVector q_;
  AllocationVector x_;
  std::vector<std::deque<double>> jobs_;  // remaining requirement per job, FIFO
  std::vector<CounterStream> arrival_rng_, service_rng_;
  std::vector<Sampler> inter_, service_;
  std::vector<double> next_arrival_, completion_;
  double review_time_ = kNever;
  std::uint64_t review_tag_ = 0;
  std::vector<double> holding_;
  std::vector<ResourceMask> res_masks_, plan_masks_;
  ResourceMask plan_heavy_ = 0;
  double quarter_len_ = 0.0;
  double next_sample_ = kNever;
  RunMetrics m_;
};

inline RunMetrics run(const NetworkSpec& spec, Policy& policy, const RunOptions& opt, Observer obs = {}) {
  Engine e(spec, policy, opt);
  if (obs) e.set_observer(std::move(obs));
  return e.run();
}

inline RunMetrics run(const NetworkSpec& spec, const std::string& policy_name, const RunOptions& opt,
                      Observer obs = {}) {
  auto policy = make_policy(policy_name, spec, opt.seed);
  return run(spec, *policy, opt, std::move(obs));
}

// ---------------------------------------------------------------------------
// Common random numbers

struct CoupledResult {
  RunMetrics a;
  RunMetrics b;
  bool paths_equal = false;
  long events_compared = 0;
};

/// Runs the same policy on two networks that differ only in incidence, with
/// identical arrival and service streams, and compares the full event paths
/// (event times and queue vectors).
inline CoupledResult run_coupled(const NetworkSpec& spec_a, const NetworkSpec& spec_b,
                                 const std::string& policy_name, const RunOptions& opt) {
  struct Step {
    double t;
    std::vector<long> q;
    bool operator==(const Step&) const = default;
  };
  std::vector<Step> path_a, path_b;
  auto recorder = [](std::vector<Step>& out) {
    return [&out](const EventRecord& r) { out.push_back({r.clock, {r.q.begin(), r.q.end()}}); };
  };
  CoupledResult res;
  res.a = run(spec_a, policy_name, opt, recorder(path_a));
  res.b = run(spec_b, policy_name, opt, recorder(path_b));
  res.paths_equal = path_a == path_b;
  res.events_compared = static_cast<long>(std::min(path_a.size(), path_b.size()));
  return res;
}

// ---------------------------------------------------------------------------
// Trace output

inline std::string busy_string(ResourceMask busy, int num_resources) {
  std::string s;
  for (int i = 0; i < num_resources; ++i) s.push_back(busy & bit(i) ? '1' : '0');
  return s;
}

inline void write_trace_csv(std::ostream& out, const NetworkSpec& spec, const std::vector<TracePoint>& trace) {
  out << "t";
  for (int j = 1; j <= spec.num_job_types(); ++j) out << ",Q_" << j;
  for (int i = 1; i <= spec.num_resources; ++i) out << ",W_" << i;
  out << ",busy\n";
  for (const auto& p : trace) {
    out << p.t;
    for (long v : p.q) out << ',' << v;
    for (double v : p.w) out << ',' << v;
    out << ',' << busy_string(p.busy, spec.num_resources) << '\n';
  }
}

}  // namespace collab
