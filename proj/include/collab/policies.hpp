#pragma once

// Scheduling policies. A policy is consulted at every event of a run and
// returns the binary allocation to apply until the next event.
//
// The review-period policy re-solves the workload split at review starts and
// keeps a target job count per heavy-traffic type. Between review starts it
// only re-runs the allocation rule, which favours types above their target.

#include <cmath>
#include <charconv>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "collab/allocation.hpp"
#include "collab/error.hpp"
#include "collab/network.hpp"
#include "collab/random.hpp"
#include "collab/solver.hpp"

namespace collab {

enum class EventKind { start, arrival, completion, review };

struct EventInfo {
  EventKind kind = EventKind::start;
  int job_type = -1;         // arrivals and completions
  std::uint64_t tag = 0;     // review events: tag handed out with the request
};

/// What a policy may observe at an event. `x` is the allocation in force
/// just before the event; a type whose job has just completed is cleared.
struct SimView {
  double clock = 0.0;
  std::span<const long> q;
  const AllocationVector* x = nullptr;
};

struct Decision {
  AllocationVector x;
  std::optional<double> review_at;  // schedule (or replace) the review event
  std::uint64_t review_tag = 0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  /// Network whose structure drives the decisions (and the audit of them).
  virtual const NetworkSpec& planning_network() const = 0;
  virtual Decision on_event(const SimView& view, const EventInfo& ev) = 0;
};

// ---------------------------------------------------------------------------
// Review length

/// Time for arrivals to lift every under-target heavy type to its target:
/// max over heavy resources i and j in J_i with Q_j <= ceil(q*_j) of
/// (q*_j - Q_j) / lambda_j, clipped below at 0. Types that never arrive are
/// skipped. `q` and `q_star` are indexed by position in p.heavy_job_types.
inline double review_length(const SplitProblem& p, std::span<const double> arrival_rate,
                            std::span<const long> q, std::span<const double> q_star,
                            std::span<const long> q_ceil) {
  double len = 0.0;
  for (int c = 0; c < p.cols(); ++c) {
    if (q[c] > q_ceil[c] || !(arrival_rate[c] > 0)) continue;
    len = std::max(len, (q_star[c] - static_cast<double>(q[c])) / arrival_rate[c]);
  }
  return len;
}

/// ceil with a small tolerance so that 4.0000000001 stays 4.
inline long target_count(double q_star) {
  return static_cast<long>(std::ceil(q_star - 1e-9));
}

inline double review_length(const NetworkSpec& spec, std::span<const long> q_heavy,
                            std::span<const double> q_star) {
  const SplitProblem p = make_split_problem(spec);
  std::vector<double> lambda;
  std::vector<long> ceil_q;
  for (int c = 0; c < p.cols(); ++c) {
    lambda.push_back(spec.job_types[p.heavy_job_types[c]].arrival_rate);
    ceil_q.push_back(target_count(q_star[c]));
  }
  return review_length(p, lambda, q_heavy, q_star, ceil_q);
}

// ---------------------------------------------------------------------------
// Proposed policy

enum class ReviewStep { untargeted, targeted };

struct ReviewState {
  ReviewStep step = ReviewStep::untargeted;
  double review_start = 0.0;
  double review_end = 0.0;
  double length = 0.0;
  long events_since_start = 0;      // arrivals and completions after review_start
  std::uint64_t tag = 0;
  std::vector<long> targets;        // per job type; kNoTarget outside J^H and in untargeted periods
  std::vector<double> q_star;       // per heavy job type, latest split
};

struct ProposedStats {
  long reviews = 0;
  long untargeted = 0;
  long targeted = 0;
  long cache_hits = 0;
};

/// The network the proposed policy plans on: the network itself when it is
/// hierarchical, else its hypothetical network when that one is.
inline NetworkSpec planning_network_for(const NetworkSpec& spec) {
  if (is_hierarchical(spec)) return spec;
  NetworkSpec hyp = hypothetical_network(spec);
  if (is_hierarchical(hyp)) return hyp;
  throw Error(ErrorCode::NotHierarchical,
              "neither the network nor its hypothetical network is hierarchical");
}

class ProposedPolicy final : public Policy {
 public:
  explicit ProposedPolicy(const NetworkSpec& spec)
      : planning_(planning_network_for(spec)), st_(planning_), problem_(make_split_problem(planning_)) {
    if (problem_.rows() == 0) throw Error(ErrorCode::InvalidNetwork, "no heavy-traffic resource");
    for (int j : problem_.heavy_job_types) lambda_.push_back(planning_.job_types[j].arrival_rate);
    rs_.targets.assign(planning_.num_job_types(), kNoTarget);
    q_heavy_.resize(problem_.cols());
  }

  std::string name() const override { return "proposed"; }
  const NetworkSpec& planning_network() const override { return planning_; }
  const ReviewState& review_state() const { return rs_; }
  const ProposedStats& stats() const { return stats_; }

  Decision on_event(const SimView& v, const EventInfo& ev) override {
    bool begin = false;
    switch (ev.kind) {
      case EventKind::start:
        begin = true;
        break;
      case EventKind::arrival:
      case EventKind::completion:
        ++rs_.events_since_start;
        begin = rs_.step == ReviewStep::untargeted || v.clock >= rs_.review_end;
        break;
      case EventKind::review:
        // the period lasts at least until the first event after its start
        begin = ev.tag == rs_.tag && rs_.step == ReviewStep::targeted && rs_.events_since_start > 0 &&
                v.clock >= rs_.review_end;
        break;
    }
    Decision d;
    if (begin) d.review_at = begin_review(v);
    d.x = allocate_definition3(st_, v.q, rs_.targets);
    d.review_tag = rs_.tag;
    return d;
  }

 private:
  std::optional<double> begin_review(const SimView& v) {
    ++stats_.reviews;
    ++rs_.tag;
    rs_.review_start = v.clock;
    rs_.events_since_start = 0;
    for (int c = 0; c < problem_.cols(); ++c) q_heavy_[c] = v.q[problem_.heavy_job_types[c]];

    const std::vector<long>& ceil_q = targets_for(v.q);
    bool any_over = false;
    for (int c = 0; c < problem_.cols(); ++c) any_over |= q_heavy_[c] > ceil_q[c];

    std::fill(rs_.targets.begin(), rs_.targets.end(), kNoTarget);
    if (!any_over) {
      ++stats_.untargeted;
      rs_.step = ReviewStep::untargeted;
      rs_.length = 0.0;
      rs_.review_end = v.clock;
      return std::nullopt;
    }
    ++stats_.targeted;
    rs_.step = ReviewStep::targeted;
    for (int c = 0; c < problem_.cols(); ++c) rs_.targets[problem_.heavy_job_types[c]] = ceil_q[c];
    rs_.length = review_length(problem_, lambda_, q_heavy_, rs_.q_star, ceil_q);
    rs_.review_end = v.clock + rs_.length;
    if (rs_.length > 0) return rs_.review_end;
    return std::nullopt;
  }

  const std::vector<long>& targets_for(std::span<const long> q) {
    if (auto it = cache_.find(q_heavy_); it != cache_.end()) {
      ++stats_.cache_hits;
      rs_.q_star = it->second.q_star;
      return it->second.ceil_q;
    }
    for (int r = 0; r < problem_.rows(); ++r) {
      double w = 0.0;
      for (int c = 0; c < problem_.cols(); ++c) w += problem_.D(r, c) * static_cast<double>(q[problem_.heavy_job_types[c]]);
      problem_.workload[r] = w;
    }
    SplitSolution sol = split(problem_);
    if (sol.status != SplitStatus::optimal)
      throw Error(ErrorCode::Infeasible, "workload split infeasible at a review start");
    Cached entry;
    entry.q_star = sol.q_star;
    for (double v : sol.q_star) entry.ceil_q.push_back(std::max(0L, target_count(v)));
    if (cache_.size() >= kCacheLimit) cache_.clear();
    auto [it, inserted] = cache_.emplace(q_heavy_, std::move(entry));
    rs_.q_star = it->second.q_star;
    return it->second.ceil_q;
  }

  struct VectorHash {
    std::size_t operator()(const std::vector<long>& v) const {
      std::uint64_t h = 0x243F6A8885A308D3ULL;
      for (long x : v) h = hash_combine(h, static_cast<std::uint64_t>(x));
      return static_cast<std::size_t>(h);
    }
  };
  struct Cached {
    std::vector<double> q_star;
    std::vector<long> ceil_q;
  };
  static constexpr std::size_t kCacheLimit = 1 << 16;

  NetworkSpec planning_;
  CollaborationStructure st_;
  SplitProblem problem_;
  std::vector<double> lambda_;
  std::vector<long> q_heavy_;
  ReviewState rs_;
  ProposedStats stats_;
  std::unordered_map<std::vector<long>, Cached, VectorHash> cache_;
};

// ---------------------------------------------------------------------------
// Baselines

class BaselinePolicy : public Policy {
 public:
  BaselinePolicy(const NetworkSpec& spec, std::string name, bool nonpreemptive)
      : spec_(spec), st_(spec), name_(std::move(name)), nonpreemptive_(nonpreemptive) {
    if (!st_.hierarchical())
      throw Error(ErrorCode::UnsupportedTopology, name_ + " is defined for hierarchical networks only");
  }

  std::string name() const override { return name_; }
  const NetworkSpec& planning_network() const override { return spec_; }

  Decision on_event(const SimView& v, const EventInfo& ev) override {
    Decision d;
    AllocationVector locked(st_.num_job_types());
    if (nonpreemptive_ && v.x) {
      for (int j = 0; j < st_.num_job_types(); ++j)
        if ((*v.x)[j] && v.q[j] > 0) locked.set(j);
    }
    d.x = decide(v, ev, locked);
    return d;
  }

 protected:
  /// `locked` holds in-service types that must stay served (empty when preemptive).
  virtual AllocationVector decide(const SimView& v, const EventInfo& ev, const AllocationVector& locked) = 0;

  AllocationVector gvm(std::span<const long> q, const AllocationVector& locked) const {
    AllocationVector x = locked;
    ResourceMask taken = st_.busy(locked);
    greedy_fill(st_, q, st_.by_size(), x, taken);
    return x;
  }

  AllocationVector pia(std::span<const long> q, const AllocationVector& locked) const {
    AllocationVector x = locked;
    ResourceMask taken = st_.busy(locked);
    for (int i = 0; i < st_.num_resources(); ++i) {
      if (taken & bit(i)) continue;
      for (int j = 0; j < st_.num_job_types(); ++j) {
        if (st_.mask(j) == bit(i) && q[j] > 0) {
          x.set(j);
          taken |= bit(i);
          break;
        }
      }
    }
    greedy_fill(st_, q, st_.by_size(), x, taken);
    return x;
  }

  NetworkSpec spec_;
  CollaborationStructure st_;
  std::string name_;
  bool nonpreemptive_;
};

/// Preemptive priority by descending collaboration level |I_j|.
class GvmPolicy final : public BaselinePolicy {
 public:
  explicit GvmPolicy(const NetworkSpec& spec, bool np = false) : BaselinePolicy(spec, np ? "np-gvm" : "gvm", np) {}

 protected:
  AllocationVector decide(const SimView& v, const EventInfo&, const AllocationVector& locked) override {
    return gvm(v.q, locked);
  }
};

/// Each resource first serves a nonempty type it processes alone.
class PiaPolicy final : public BaselinePolicy {
 public:
  explicit PiaPolicy(const NetworkSpec& spec, bool np = false) : BaselinePolicy(spec, np ? "np-pia" : "pia", np) {}

 protected:
  AllocationVector decide(const SimView& v, const EventInfo&, const AllocationVector& locked) override {
    return pia(v.q, locked);
  }
};

/// Hysteresis between PIA and priority to the top type: once Q_top reaches
/// the threshold, the top type has priority until its buffer empties.
class PhtPolicy final : public BaselinePolicy {
 public:
  PhtPolicy(const NetworkSpec& spec, long threshold)
      : BaselinePolicy(spec, "pht:" + std::to_string(threshold), false), threshold_(threshold) {
    if (threshold < 1) throw Error(ErrorCode::PolicyError, "pht threshold must be >= 1");
    const ResourceMask all = spec.num_resources >= kMaxResources ? ~ResourceMask{0} : bit(spec.num_resources) - 1;
    for (int j = 0; j < st_.num_job_types(); ++j) {
      if (st_.mask(j) != all) continue;
      if (top_ >= 0) throw Error(ErrorCode::UnsupportedTopology, "pht needs a unique job type using every resource");
      top_ = j;
    }
    if (top_ < 0) throw Error(ErrorCode::UnsupportedTopology, "pht needs a job type using every resource");
  }

  int top_type() const { return top_; }
  long threshold() const { return threshold_; }

 protected:
  AllocationVector decide(const SimView& v, const EventInfo&, const AllocationVector& locked) override {
    if (v.q[top_] >= threshold_) priority_ = true;
    if (v.q[top_] == 0) priority_ = false;
    return priority_ ? gvm(v.q, locked) : pia(v.q, locked);
  }

 private:
  long threshold_;
  int top_ = -1;
  bool priority_ = false;
};

/// Maximizes sum_j x_j mu_j Q_j over feasible allocations; ties go to the
/// larger resource set.
class MaxPressurePolicy final : public BaselinePolicy {
 public:
  explicit MaxPressurePolicy(const NetworkSpec& spec, bool np = false)
      : BaselinePolicy(spec, np ? "np-mp" : "mp", np) {
    for (const auto& jt : spec.job_types) mu_.push_back(jt.service_rate);
  }

 protected:
  AllocationVector decide(const SimView& v, const EventInfo&, const AllocationVector& locked) override {
    auto gain = [&](int j) { return mu_[j] * static_cast<double>(v.q[j]); };
    auto x = best_allocation<double>(st_, v.q, 0, gain, nonpreemptive_ ? &locked : nullptr);
    return x ? *x : locked;
  }

 private:
  std::vector<double> mu_;
};

/// A uniformly weighted random allocation among those keeping every heavy
/// resource with work busy.
class RandomWorkConservingPolicy final : public BaselinePolicy {
 public:
  RandomWorkConservingPolicy(const NetworkSpec& spec, std::uint64_t seed)
      : BaselinePolicy(spec, "random-wc", false), rng_(seed, StreamRole::policy, 0) {}

 protected:
  AllocationVector decide(const SimView& v, const EventInfo&, const AllocationVector&) override {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> g(st_.num_job_types());
    for (auto& x : g) x = u(rng_);
    auto x = best_allocation<double>(st_, v.q, st_.pending(v.q) & st_.heavy(), [&](int j) { return g[j]; });
    if (!x) throw Error(ErrorCode::PolicyError, "no work-conserving allocation exists");
    return *x;
  }

 private:
  CounterStream rng_;
};

// ---------------------------------------------------------------------------

inline std::unique_ptr<Policy> make_policy(const std::string& name, const NetworkSpec& spec,
                                           std::uint64_t seed = 0) {
  if (name == "proposed") return std::make_unique<ProposedPolicy>(spec);
  if (name == "gvm") return std::make_unique<GvmPolicy>(spec);
  if (name == "np-gvm") return std::make_unique<GvmPolicy>(spec, true);
  if (name == "pia") return std::make_unique<PiaPolicy>(spec);
  if (name == "np-pia") return std::make_unique<PiaPolicy>(spec, true);
  if (name == "mp") return std::make_unique<MaxPressurePolicy>(spec);
  if (name == "np-mp") return std::make_unique<MaxPressurePolicy>(spec, true);
  if (name == "random-wc") return std::make_unique<RandomWorkConservingPolicy>(spec, seed);
  if (name.rfind("pht:", 0) == 0) {
    long k = 0;
    const char* first = name.data() + 4;
    const char* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, k);
    if (ec != std::errc{} || ptr != last || first == last)
      throw Error(ErrorCode::PolicyError, "bad pht threshold in '" + name + "'");
    return std::make_unique<PhtPolicy>(spec, k);
  }
  throw Error(ErrorCode::PolicyError, "unknown policy '" + name + "'");
}

}  // namespace collab
