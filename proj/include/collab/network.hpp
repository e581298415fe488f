#pragma once

// Parallel network instances: job types, resources, incidence, and the
// structural analysis used by every policy (collaboration architecture,
// loads, heavy-traffic sets, hypothetical network).

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "collab/error.hpp"

namespace collab {

/// Bit i set iff resource i is a member. Networks are limited to 64 resources.
using ResourceMask = std::uint64_t;
inline constexpr int kMaxResources = 64;

inline ResourceMask bit(int i) { return ResourceMask{1} << i; }
inline int popcount(ResourceMask m) { return std::popcount(m); }

enum class DistKind { exponential, deterministic, gamma, lognormal };

inline const char* to_string(DistKind k) {
  switch (k) {
    case DistKind::exponential: return "exponential";
    case DistKind::deterministic: return "deterministic";
    case DistKind::gamma: return "gamma";
    case DistKind::lognormal: return "lognormal";
  }
  return "exponential";
}

inline std::optional<DistKind> parse_dist_kind(const std::string& s) {
  if (s == "exponential") return DistKind::exponential;
  if (s == "deterministic") return DistKind::deterministic;
  if (s == "gamma") return DistKind::gamma;
  if (s == "lognormal") return DistKind::lognormal;
  return std::nullopt;
}

struct JobType {
  double arrival_rate = 1.0;
  double service_rate = 1.0;
  double holding_cost = 1.0;
  double arrival_cv = 1.0;
  double service_cv = 1.0;
  DistKind arrival_dist = DistKind::exponential;
  DistKind service_dist = DistKind::exponential;
  std::vector<int> resources;  // I_j, 0-based

  ResourceMask mask() const {
    ResourceMask m = 0;
    for (int i : resources)
      if (i >= 0 && i < kMaxResources) m |= bit(i);
    return m;
  }
};

struct NetworkSpec {
  std::vector<JobType> job_types;
  int num_resources = 0;
  std::optional<std::vector<int>> heavy_set;
  double heavy_threshold = 0.9;

  int num_job_types() const { return static_cast<int>(job_types.size()); }

  ResourceMask resource_mask(int j) const { return job_types[j].mask(); }

  bool uses(int i, int j) const { return (resource_mask(j) & bit(i)) != 0; }

  /// I x J binary matrix A with A[i][j] = 1 iff resource i serves type j.
  std::vector<std::vector<int>> incidence() const {
    std::vector<std::vector<int>> a(num_resources, std::vector<int>(num_job_types(), 0));
    for (int j = 0; j < num_job_types(); ++j)
      for (int i = 0; i < num_resources; ++i) a[i][j] = uses(i, j) ? 1 : 0;
    return a;
  }

  /// J_i as a sorted list of job types.
  std::vector<int> jobs_of(int i) const {
    std::vector<int> out;
    for (int j = 0; j < num_job_types(); ++j)
      if (uses(i, j)) out.push_back(j);
    return out;
  }

  /// Replace I_j for every type from an I x J incidence matrix.
  void set_incidence(const std::vector<std::vector<int>>& a) {
    for (int j = 0; j < num_job_types(); ++j) {
      job_types[j].resources.clear();
      for (int i = 0; i < num_resources; ++i)
        if (a[i][j]) job_types[j].resources.push_back(i);
    }
  }
};

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
  NoJobTypes,
  BadResourceCount,
  ResourceIndexOutOfRange,
  JobTypeWithoutResource,
  ResourceWithoutJobType,
  NestedResourcePair,
  NonPositiveServiceRate,
  NegativeArrivalRate,
  ZeroArrivalRate,
  NonPositiveHoldingCost,
  NegativeCv,
  DistributionCvMismatch,
  HeavySetOutOfRange,
  EmptyHeavySet,
  Disconnected,
};

enum class Severity { error, warning };

struct Violation {
  ViolationKind kind;
  Severity severity = Severity::error;
  std::vector<int> indices;
  std::string message;
};

inline bool has_errors(const std::vector<Violation>& vs) {
  return std::any_of(vs.begin(), vs.end(),
                     [](const Violation& v) { return v.severity == Severity::error; });
}

/// Resources in heavy traffic: the declared set, or {i : rho_i >= heavy_threshold}.
std::vector<int> heavy_resources(const NetworkSpec& spec);
std::vector<double> loads(const NetworkSpec& spec);
bool is_connected(const NetworkSpec& spec);

namespace detail {

inline std::string join(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
  return os.str();
}

inline Violation make_violation(ViolationKind kind, std::vector<int> idx, std::string msg,
                                Severity sev = Severity::error) {
  return Violation{kind, sev, std::move(idx), std::move(msg)};
}

}  // namespace detail

inline std::vector<Violation> validate(const NetworkSpec& spec) {
  using detail::make_violation;
  std::vector<Violation> out;
  const int J = spec.num_job_types();
  const int I = spec.num_resources;

  if (J == 0) out.push_back(make_violation(ViolationKind::NoJobTypes, {}, "network has no job types"));
  if (I <= 0 || I > kMaxResources) {
    out.push_back(make_violation(ViolationKind::BadResourceCount, {I},
                                 "num_resources must be in [1, 64]"));
    return out;
  }

  bool indices_ok = true;
  for (int j = 0; j < J; ++j) {
    const auto& jt = spec.job_types[j];
    for (int i : jt.resources) {
      if (i < 0 || i >= I) {
        indices_ok = false;
        out.push_back(make_violation(ViolationKind::ResourceIndexOutOfRange, {j, i},
                                     "job type " + std::to_string(j) + " references resource " +
                                         std::to_string(i)));
      }
    }
    if (jt.mask() == 0)
      out.push_back(make_violation(ViolationKind::JobTypeWithoutResource, {j},
                                   "job type " + std::to_string(j) + " has no resource"));
    if (!(jt.service_rate > 0))
      out.push_back(make_violation(ViolationKind::NonPositiveServiceRate, {j},
                                   "service_rate must be > 0"));
    if (jt.arrival_rate < 0)
      out.push_back(make_violation(ViolationKind::NegativeArrivalRate, {j},
                                   "arrival_rate must be >= 0"));
    else if (jt.arrival_rate == 0)
      out.push_back(make_violation(ViolationKind::ZeroArrivalRate, {j},
                                   "job type " + std::to_string(j) + " never arrives",
                                   Severity::warning));
    if (!(jt.holding_cost > 0))
      out.push_back(make_violation(ViolationKind::NonPositiveHoldingCost, {j},
                                   "holding_cost must be > 0"));
    if (jt.arrival_cv < 0 || jt.service_cv < 0)
      out.push_back(make_violation(ViolationKind::NegativeCv, {j}, "cv must be >= 0"));
    auto cv_ok = [](DistKind k, double cv) {
      if (k == DistKind::exponential) return cv == 1.0;
      if (k == DistKind::deterministic) return cv == 0.0;
      return true;
    };
    if (!cv_ok(jt.arrival_dist, jt.arrival_cv) || !cv_ok(jt.service_dist, jt.service_cv))
      out.push_back(make_violation(ViolationKind::DistributionCvMismatch, {j},
                                   "exponential requires cv=1, deterministic requires cv=0"));
  }
  if (!indices_ok || J == 0) return out;

  std::vector<std::vector<int>> jobs(I);
  for (int i = 0; i < I; ++i) {
    jobs[i] = spec.jobs_of(i);
    if (jobs[i].empty())
      out.push_back(make_violation(ViolationKind::ResourceWithoutJobType, {i},
                                   "resource " + std::to_string(i) + " serves no job type"));
  }
  for (int i = 0; i < I; ++i) {
    for (int k = 0; k < I; ++k) {
      if (i == k || jobs[i].empty()) continue;
      const bool subset = std::includes(jobs[k].begin(), jobs[k].end(), jobs[i].begin(), jobs[i].end());
      // identical sets are reported once, for the (lower, higher) pair
      if (subset && !(jobs[i] == jobs[k] && i > k))
        out.push_back(make_violation(ViolationKind::NestedResourcePair, {i, k},
                                     "resource pair with nested job sets: J_" + std::to_string(i) +
                                         " within J_" + std::to_string(k)));
    }
  }

  if (spec.heavy_set) {
    for (int i : *spec.heavy_set)
      if (i < 0 || i >= I)
        out.push_back(make_violation(ViolationKind::HeavySetOutOfRange, {i},
                                     "heavy_set index out of range"));
  }
  if (heavy_resources(spec).empty())
    out.push_back(make_violation(ViolationKind::EmptyHeavySet, {},
                                 "no resource in heavy traffic"));

  if (!is_connected(spec))
    out.push_back(make_violation(ViolationKind::Disconnected, {},
                                 "collaboration graph is disconnected; treated as one system",
                                 Severity::warning));
  return out;
}

// ---------------------------------------------------------------------------
// Loads and traffic classes

inline std::vector<double> loads(const NetworkSpec& spec) {
  std::vector<double> rho(spec.num_resources, 0.0);
  for (int j = 0; j < spec.num_job_types(); ++j) {
    const auto& jt = spec.job_types[j];
    for (int i = 0; i < spec.num_resources; ++i)
      if (spec.uses(i, j)) rho[i] += jt.arrival_rate / jt.service_rate;
  }
  return rho;
}

inline std::vector<int> heavy_resources(const NetworkSpec& spec) {
  std::vector<int> out;
  if (spec.heavy_set) {
    for (int i : *spec.heavy_set)
      if (i >= 0 && i < spec.num_resources) out.push_back(i);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  const auto rho = loads(spec);
  for (int i = 0; i < spec.num_resources; ++i)
    if (rho[i] >= spec.heavy_threshold) out.push_back(i);
  return out;
}

inline ResourceMask heavy_mask(const NetworkSpec& spec) {
  ResourceMask m = 0;
  for (int i : heavy_resources(spec)) m |= bit(i);
  return m;
}

/// J^H as a sorted list.
inline std::vector<int> heavy_job_types(const NetworkSpec& spec) {
  const ResourceMask h = heavy_mask(spec);
  std::vector<int> out;
  for (int j = 0; j < spec.num_job_types(); ++j)
    if (spec.resource_mask(j) & h) out.push_back(j);
  return out;
}

/// W_i = sum over j in J_i of Q_j / mu_j, for every resource.
template <class Count>
std::vector<double> workload(const NetworkSpec& spec, std::span<const Count> q) {
  std::vector<double> w(spec.num_resources, 0.0);
  for (int j = 0; j < spec.num_job_types(); ++j) {
    if (q[j] == 0) continue;
    const double load = static_cast<double>(q[j]) / spec.job_types[j].service_rate;
    for (int i : spec.job_types[j].resources) w[i] += load;
  }
  return w;
}

inline std::vector<double> workload(const NetworkSpec& spec, const std::vector<long>& q) {
  return workload<long>(spec, std::span<const long>(q));
}

/// Job types are adjacent iff they share a resource.
inline bool is_connected(const NetworkSpec& spec) {
  const int J = spec.num_job_types();
  if (J <= 1) return true;
  std::vector<bool> seen(J, false);
  std::vector<int> stack{0};
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    const int j = stack.back();
    stack.pop_back();
    for (int l = 0; l < J; ++l) {
      if (!seen[l] && (spec.resource_mask(j) & spec.resource_mask(l))) {
        seen[l] = true;
        ++count;
        stack.push_back(l);
      }
    }
  }
  return count == J;
}

inline bool is_hierarchical(const NetworkSpec& spec) {
  const int J = spec.num_job_types();
  for (int j = 0; j < J; ++j) {
    const ResourceMask a = spec.resource_mask(j);
    for (int l = j + 1; l < J; ++l) {
      const ResourceMask b = spec.resource_mask(l);
      const ResourceMask both = a & b;
      if (both && both != a && both != b) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Architecture report

struct CollaborationLevel {
  int num_resources = 0;        // |I_j| shared by every member
  std::vector<int> job_types;   // ascending index
};

struct ArchitectureReport {
  bool is_hierarchical = false;
  bool is_connected = false;
  std::vector<CollaborationLevel> levels;  // descending |I_j|
  std::vector<std::vector<int>> resources_of;  // I_j
  std::vector<std::vector<int>> jobs_of;       // J_i
  std::vector<int> heavy_resources;            // I^H
  std::vector<int> light_resources;            // I^L
  std::vector<int> heavy_job_types;            // J^H
  std::vector<int> light_job_types;            // J^L
  std::vector<int> mixed_job_types;            // J^{HL}
  std::vector<double> loads;
};

inline ArchitectureReport analyze_architecture(const NetworkSpec& spec) {
  ArchitectureReport r;
  const int J = spec.num_job_types();
  const int I = spec.num_resources;
  r.is_hierarchical = is_hierarchical(spec);
  r.is_connected = is_connected(spec);
  r.loads = loads(spec);
  r.heavy_resources = heavy_resources(spec);
  const ResourceMask h = heavy_mask(spec);
  for (int i = 0; i < I; ++i) {
    r.jobs_of.push_back(spec.jobs_of(i));
    if (!(h & bit(i))) r.light_resources.push_back(i);
  }
  std::vector<int> sizes;
  for (int j = 0; j < J; ++j) {
    const ResourceMask m = spec.resource_mask(j);
    std::vector<int> res;
    for (int i = 0; i < I; ++i)
      if (m & bit(i)) res.push_back(i);
    r.resources_of.push_back(res);
    sizes.push_back(popcount(m));
    const bool touches_heavy = (m & h) != 0;
    const bool touches_light = (m & ~h) != 0;
    if (touches_heavy) r.heavy_job_types.push_back(j);
    else r.light_job_types.push_back(j);
    if (touches_heavy && touches_light) r.mixed_job_types.push_back(j);
  }
  std::vector<int> distinct = sizes;
  std::sort(distinct.begin(), distinct.end(), std::greater<>());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (int s : distinct) {
    CollaborationLevel lvl{s, {}};
    for (int j = 0; j < J; ++j)
      if (sizes[j] == s) lvl.job_types.push_back(j);
    r.levels.push_back(std::move(lvl));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Hypothetical network: resources forced to idle while type j is served are
// attached to type j, first come first served in declared type order.

/// Z_j: resources outside I_j that no type processable in parallel with j uses.
inline std::vector<ResourceMask> forced_idle_sets(const NetworkSpec& spec) {
  const int J = spec.num_job_types();
  const ResourceMask all = spec.num_resources >= kMaxResources
                               ? ~ResourceMask{0}
                               : (bit(spec.num_resources) - 1);
  std::vector<ResourceMask> z(J, 0);
  for (int j = 0; j < J; ++j) {
    const ResourceMask mj = spec.resource_mask(j);
    ResourceMask parallel = 0;
    for (int l = 0; l < J; ++l)
      if ((spec.resource_mask(l) & mj) == 0) parallel |= spec.resource_mask(l);
    z[j] = all & ~mj & ~parallel;
  }
  return z;
}

inline NetworkSpec hypothetical_network(const NetworkSpec& spec) {
  NetworkSpec out = spec;
  const auto z = forced_idle_sets(spec);
  ResourceMask claimed = 0;
  for (int j = 0; j < spec.num_job_types(); ++j) {
    const ResourceMask extra = z[j] & ~claimed;
    claimed |= z[j];
    if (!extra) continue;
    const ResourceMask m = spec.resource_mask(j) | extra;
    auto& res = out.job_types[j].resources;
    res.clear();
    for (int i = 0; i < spec.num_resources; ++i)
      if (m & bit(i)) res.push_back(i);
  }
  return out;
}

/// Resources that serve some job type alone (used as an invariant of hierarchical networks).
inline std::vector<int> resources_with_private_job(const NetworkSpec& spec) {
  std::vector<int> out;
  for (int i = 0; i < spec.num_resources; ++i)
    for (int j = 0; j < spec.num_job_types(); ++j)
      if (spec.resource_mask(j) == bit(i)) {
        out.push_back(i);
        break;
      }
  return out;
}

}  // namespace collab
