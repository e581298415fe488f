#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "collab/network.hpp"

namespace collab::testing {

inline JobType job(std::vector<int> resources, double lambda = 1.0, double mu = 1.0, double h = 1.0) {
  JobType jt;
  jt.arrival_rate = lambda;
  jt.service_rate = mu;
  jt.holding_cost = h;
  jt.resources = std::move(resources);
  return jt;
}

inline NetworkSpec network(int num_resources, std::vector<JobType> types,
                           std::optional<std::vector<int>> heavy = std::nullopt) {
  NetworkSpec s;
  s.num_resources = num_resources;
  s.job_types = std::move(types);
  s.heavy_set = std::move(heavy);
  return s;
}

/// Two resources; type 0 needs both, types 1 and 2 need one each.
inline NetworkSpec two_resource(double lambda = 0.7, double mu = 2.0, std::vector<double> h = {1, 1, 1}) {
  return network(2, {job({0, 1}, lambda, mu, h[0]), job({0}, lambda, mu, h[1]), job({1}, lambda, mu, h[2])},
                 std::vector<int>{0, 1});
}

/// Three resources, every type collaborates on a different pair.
inline NetworkSpec triangle(double lambda = 0.28, double mu = 1.0) {
  return network(3, {job({0, 1}, lambda, mu), job({0, 2}, lambda, mu), job({1, 2}, lambda, mu)},
                 std::vector<int>{0, 1, 2});
}

/// Four types on three resources; the second type forces the third resource idle.
inline NetworkSpec four_type_capacity_loss() {
  return network(3, {job({0}), job({0, 1}), job({0, 2}), job({1, 2})});
}

/// The six edges of the complete graph on four resources.
inline NetworkSpec k4_edges() {
  return network(4, {job({0, 1}), job({1, 2}), job({0, 2}), job({2, 3}), job({0, 3}), job({1, 3})});
}

inline NetworkSpec single(double lambda, double mu, double h = 1.0) {
  return network(1, {job({0}, lambda, mu, h)}, std::vector<int>{0});
}

/// Random hierarchical network: a random laminar family of resource sets,
/// each with at least one job type, every leaf resource with a private type.
inline NetworkSpec random_hierarchical(std::mt19937_64& rng, int num_resources) {
  std::vector<std::vector<int>> sets;
  std::function<void(std::vector<int>)> carve = [&](std::vector<int> block) {
    sets.push_back(block);
    if (block.size() == 1) return;
    std::shuffle(block.begin(), block.end(), rng);
    std::uniform_int_distribution<int> parts(2, std::min<int>(3, static_cast<int>(block.size())));
    const int k = parts(rng);
    std::vector<std::vector<int>> children(k);
    for (std::size_t a = 0; a < block.size(); ++a) children[a % k].push_back(block[a]);
    for (auto& c : children) {
      std::sort(c.begin(), c.end());
      carve(c);
    }
  };
  std::vector<int> all(num_resources);
  for (int i = 0; i < num_resources; ++i) all[i] = i;
  carve(all);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::bernoulli_distribution extra(0.3);
  NetworkSpec s;
  s.num_resources = num_resources;
  for (const auto& set : sets) {
    s.job_types.push_back(job(set, 0.1, u(rng), u(rng)));
    if (extra(rng)) s.job_types.push_back(job(set, 0.1, u(rng), u(rng)));
  }
  std::vector<int> heavy;
  std::bernoulli_distribution coin(0.6);
  for (int i = 0; i < num_resources; ++i)
    if (coin(rng)) heavy.push_back(i);
  if (heavy.empty()) heavy.push_back(0);
  s.heavy_set = heavy;
  return s;
}

}  // namespace collab::testing
