#pragma once

// Binary resource allocations and the machinery for choosing them.
//
// In a hierarchical network the distinct resource sets I_j form a laminar
// family, i.e. a forest under inclusion. Every allocation is a choice of at
// most one job type per root-to-leaf chain, which makes exact maximization of
// any additive score a linear-time tree recursion.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "collab/error.hpp"
#include "collab/network.hpp"

namespace collab {

using QueueVector = std::vector<long>;

/// x[j] = 1 iff job type j is in service.
class AllocationVector {
 public:
  AllocationVector() = default;
  explicit AllocationVector(int num_job_types) : x_(num_job_types, 0) {}

  int size() const { return static_cast<int>(x_.size()); }
  bool operator[](int j) const { return x_[j] != 0; }
  void set(int j, bool on = true) { x_[j] = on ? 1 : 0; }
  bool any() const { return std::any_of(x_.begin(), x_.end(), [](auto v) { return v != 0; }); }
  std::vector<int> active() const {
    std::vector<int> out;
    for (int j = 0; j < size(); ++j)
      if (x_[j]) out.push_back(j);
    return out;
  }

  friend bool operator==(const AllocationVector&, const AllocationVector&) = default;

 private:
  std::vector<std::uint8_t> x_;
};

/// (p1, p2): heavy resources serving over-target types, total busy resources.
struct IndexPair {
  int p1 = 0;
  int p2 = 0;

  friend auto operator<=>(const IndexPair&, const IndexPair&) = default;
  IndexPair& operator+=(const IndexPair& o) {
    p1 += o.p1;
    p2 += o.p2;
    return *this;
  }
};

/// The partial order: a dominates b iff a.p1 > b.p1, or equal p1 and a.p2 >= b.p2.
inline bool dominates(const IndexPair& a, const IndexPair& b) {
  return a.p1 > b.p1 || (a.p1 == b.p1 && a.p2 >= b.p2);
}

/// Target marker for job types without a target (never "over target").
inline constexpr long kNoTarget = std::numeric_limits<long>::max();

// ---------------------------------------------------------------------------

/// Precomputed structure of a network used on every allocation decision.
class CollaborationStructure {
 public:
  struct Node {
    ResourceMask set = 0;
    std::vector<int> types;     // job types with I_j == set, ascending
    std::vector<int> children;  // maximal strict subsets
    ResourceMask uncovered = 0; // set minus union of children
  };

  CollaborationStructure() = default;

  explicit CollaborationStructure(const NetworkSpec& spec)
      : num_types_(spec.num_job_types()), num_resources_(spec.num_resources),
        heavy_(heavy_mask(spec)), hierarchical_(is_hierarchical(spec)) {
    for (int j = 0; j < num_types_; ++j) {
      masks_.push_back(spec.resource_mask(j));
      sizes_.push_back(popcount(masks_.back()));
      heavy_sizes_.push_back(popcount(masks_.back() & heavy_));
    }
    by_size_.resize(num_types_);
    std::iota(by_size_.begin(), by_size_.end(), 0);
    std::stable_sort(by_size_.begin(), by_size_.end(),
                     [&](int a, int b) { return sizes_[a] > sizes_[b]; });
    if (hierarchical_) build_forest();
  }

  int num_job_types() const { return num_types_; }
  int num_resources() const { return num_resources_; }
  ResourceMask mask(int j) const { return masks_[j]; }
  int size(int j) const { return sizes_[j]; }
  int heavy_size(int j) const { return heavy_sizes_[j]; }
  ResourceMask heavy() const { return heavy_; }
  bool hierarchical() const { return hierarchical_; }
  /// Job types by descending |I_j|, ties by ascending index.
  const std::vector<int>& by_size() const { return by_size_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<int>& roots() const { return roots_; }
  int node_of(int j) const { return node_of_[j]; }

  ResourceMask busy(const AllocationVector& x) const {
    ResourceMask m = 0;
    for (int j = 0; j < num_types_; ++j)
      if (x[j]) m |= masks_[j];
    return m;
  }

  /// Resources with positive workload: union of I_j over nonempty buffers.
  ResourceMask pending(std::span<const long> q) const {
    ResourceMask m = 0;
    for (int j = 0; j < num_types_; ++j)
      if (q[j] > 0) m |= masks_[j];
    return m;
  }

 private:
  void build_forest() {
    std::vector<ResourceMask> distinct = masks_;
    std::sort(distinct.begin(), distinct.end(), [](ResourceMask a, ResourceMask b) {
      return popcount(a) != popcount(b) ? popcount(a) > popcount(b) : a < b;
    });
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (ResourceMask s : distinct) {
      Node n;
      n.set = s;
      n.uncovered = s;
      nodes_.push_back(n);
    }
    node_of_.assign(num_types_, -1);
    for (int j = 0; j < num_types_; ++j) {
      for (int k = 0; k < static_cast<int>(nodes_.size()); ++k)
        if (nodes_[k].set == masks_[j]) {
          nodes_[k].types.push_back(j);
          node_of_[j] = k;
        }
    }
    // supersets come first, so the last strict superset seen is the tightest
    for (int k = 0; k < static_cast<int>(nodes_.size()); ++k) {
      int parent = -1;
      for (int p = 0; p < k; ++p) {
        const ResourceMask ps = nodes_[p].set;
        if ((ps & nodes_[k].set) == nodes_[k].set && ps != nodes_[k].set) {
          if (parent < 0 || popcount(ps) <= popcount(nodes_[parent].set)) parent = p;
        }
      }
      if (parent < 0) {
        roots_.push_back(k);
      } else {
        nodes_[parent].children.push_back(k);
        nodes_[parent].uncovered &= ~nodes_[k].set;
      }
    }
  }

  int num_types_ = 0;
  int num_resources_ = 0;
  ResourceMask heavy_ = 0;
  bool hierarchical_ = false;
  std::vector<ResourceMask> masks_;
  std::vector<int> sizes_;
  std::vector<int> heavy_sizes_;
  std::vector<int> by_size_;
  std::vector<Node> nodes_;
  std::vector<int> roots_;
  std::vector<int> node_of_;
};

// ---------------------------------------------------------------------------
// Feasibility

/// Only nonempty buffers served, and no resource on two job types.
inline bool is_feasible(const CollaborationStructure& st, const AllocationVector& x,
                        std::span<const long> q) {
  ResourceMask used = 0;
  for (int j = 0; j < st.num_job_types(); ++j) {
    if (!x[j]) continue;
    if (q[j] <= 0 || (used & st.mask(j))) return false;
    used |= st.mask(j);
  }
  return true;
}

/// Membership in X(t): feasible and every heavy resource with work is busy.
inline bool is_work_conserving(const CollaborationStructure& st, const AllocationVector& x,
                               std::span<const long> q) {
  if (!is_feasible(st, x, q)) return false;
  const ResourceMask need = st.pending(q) & st.heavy();
  return (st.busy(x) & need) == need;
}

inline IndexPair index_pair(const CollaborationStructure& st, const AllocationVector& x,
                            std::span<const long> q, std::span<const long> targets) {
  IndexPair ip;
  for (int j = 0; j < st.num_job_types(); ++j) {
    if (!x[j]) continue;
    ip.p2 += st.size(j);
    if (st.heavy_size(j) > 0 && q[j] > targets[j]) ip.p1 += st.heavy_size(j);
  }
  return ip;
}

// ---------------------------------------------------------------------------
// Exact maximization over a hierarchical network

namespace detail {

template <class Score>
struct Partial {
  Score score{};
  std::vector<int> chosen;
};

template <class Score, class Gain>
std::optional<Partial<Score>> best_in_subtree(const CollaborationStructure& st, int node,
                                              std::span<const long> q, ResourceMask required,
                                              const std::vector<int>& locked_node_count,
                                              const AllocationVector* locked, Gain& gain) {
  const auto& n = st.nodes()[node];
  // option (a): one job type at this node covers the whole set
  std::optional<Partial<Score>> take;
  const bool locked_below = locked_node_count[node] > 0;
  int forced_here = -1;
  if (locked)
    for (int j : n.types)
      if ((*locked)[j]) forced_here = j;
  if (forced_here >= 0) {
    return Partial<Score>{gain(forced_here), {forced_here}};
  }
  if (!locked_below) {
    for (int j : n.types) {
      if (q[j] <= 0) continue;
      Score s = gain(j);
      if (!take || take->score < s) take = Partial<Score>{s, {j}};
    }
  }
  // option (b): leave this node idle and recurse
  std::optional<Partial<Score>> skip;
  if ((n.uncovered & required) == 0) {
    Partial<Score> acc;
    bool ok = true;
    for (int c : n.children) {
      auto sub = best_in_subtree<Score>(st, c, q, required, locked_node_count, locked, gain);
      if (!sub) {
        ok = false;
        break;
      }
      acc.score += sub->score;
      acc.chosen.insert(acc.chosen.end(), sub->chosen.begin(), sub->chosen.end());
    }
    if (ok) skip = std::move(acc);
  }
  if (take && skip) return skip->score > take->score ? skip : take;
  return take ? take : skip;
}

}  // namespace detail

/// Allocation maximizing the additive score sum_j gain(j) x_j over feasible
/// allocations that keep every resource in `required` busy and include every
/// type set in `locked`. Ties prefer serving the larger resource set.
/// Returns nullopt when no such allocation exists.
template <class Score, class Gain>
std::optional<AllocationVector> best_allocation(const CollaborationStructure& st, std::span<const long> q,
                                                ResourceMask required, Gain gain,
                                                const AllocationVector* locked = nullptr) {
  if (!st.hierarchical())
    throw Error(ErrorCode::NotHierarchical, "exact allocation needs a hierarchical network");
  const auto& nodes = st.nodes();
  // locked_node_count[k]: locked types strictly below node k
  std::vector<int> locked_node_count(nodes.size(), 0);
  if (locked) {
    std::vector<int> parent(nodes.size(), -1);
    for (int k = 0; k < static_cast<int>(nodes.size()); ++k)
      for (int c : nodes[k].children) parent[c] = k;
    for (int j = 0; j < st.num_job_types(); ++j) {
      if (!(*locked)[j]) continue;
      for (int k = parent[st.node_of(j)]; k >= 0; k = parent[k]) ++locked_node_count[k];
    }
  }
  AllocationVector x(st.num_job_types());
  for (int r : st.roots()) {
    auto part = detail::best_in_subtree<Score>(st, r, q, required, locked_node_count, locked, gain);
    if (!part) return std::nullopt;
    for (int j : part->chosen) x.set(j);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Greedy allocation rule for review periods

/// Serve nonempty types in `order` whenever all their resources are still free.
inline void greedy_fill(const CollaborationStructure& st, std::span<const long> q,
                        const std::vector<int>& order, AllocationVector& x, ResourceMask& taken) {
  for (int j : order) {
    if (x[j] || q[j] <= 0 || (st.mask(j) & taken)) continue;
    x.set(j);
    taken |= st.mask(j);
  }
}

/// Two-pass rule: over-target heavy types by descending |I_j ∩ I^H|, then the
/// rest by descending |I_j|, each assigned when its resources are all free
/// (ties by lowest index). If the greedy result leaves a heavy resource with
/// work idle, the exact (p1, p2) maximizer over X(t) is returned instead.
inline AllocationVector allocate_definition3(const CollaborationStructure& st, std::span<const long> q,
                                             std::span<const long> targets) {
  if (!st.hierarchical())
    throw Error(ErrorCode::NotHierarchical, "allocation rule requires hierarchical collaboration");
  const int J = st.num_job_types();
  std::vector<int> over, rest;
  for (int j : st.by_size()) {
    if (st.heavy_size(j) > 0 && q[j] > targets[j]) over.push_back(j);
    else rest.push_back(j);
  }
  std::sort(over.begin(), over.end(), [&](int a, int b) {
    return st.heavy_size(a) != st.heavy_size(b) ? st.heavy_size(a) > st.heavy_size(b) : a < b;
  });
  AllocationVector x(J);
  ResourceMask taken = 0;
  greedy_fill(st, q, over, x, taken);
  greedy_fill(st, q, rest, x, taken);
  if (is_work_conserving(st, x, q)) return x;

  const ResourceMask required = st.pending(q) & st.heavy();
  auto gain = [&](int j) {
    return IndexPair{(st.heavy_size(j) > 0 && q[j] > targets[j]) ? st.heavy_size(j) : 0, st.size(j)};
  };
  auto exact = best_allocation<IndexPair>(st, q, required, gain);
  if (!exact) throw Error(ErrorCode::PolicyError, "no work-conserving allocation exists");
  return *exact;
}

inline AllocationVector allocate_definition3(const NetworkSpec& spec, std::span<const long> q,
                                             std::span<const long> targets) {
  return allocate_definition3(CollaborationStructure(spec), q, targets);
}

}  // namespace collab
