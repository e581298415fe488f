#pragma once

// Counter-based random streams. Output n of a stream is a bijective mix of
// key + n * golden_gamma (the SplitMix64 construction), so a stream is fully
// determined by its key and independent keys give independent streams.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <variant>

#include "collab/network.hpp"

namespace collab {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a + kGoldenGamma * (b + 1) + mix64(b));
}

/// Seed of replication k of a run seeded with `seed`.
inline std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t k) { return hash_combine(seed, k); }

enum class StreamRole : std::uint64_t { arrival = 1, service = 2, policy = 3, diffusion = 4 };

/// UniformRandomBitGenerator over a counter.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  CounterStream() = default;
  explicit CounterStream(std::uint64_t key) : key_(key) {}
  CounterStream(std::uint64_t seed, StreamRole role, std::uint64_t index)
      : key_(hash_combine(hash_combine(seed, static_cast<std::uint64_t>(role)), index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + kGoldenGamma * ++counter_); }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// A positive random variable given by kind, mean and coefficient of variation.
class Sampler {
 public:
  Sampler() = default;
  Sampler(DistKind kind, double mean, double cv) : mean_(mean) {
    if (kind == DistKind::deterministic || cv == 0.0) {
      dist_ = std::monostate{};
    } else if (kind == DistKind::exponential) {
      dist_ = std::exponential_distribution<double>(1.0 / mean);
    } else if (kind == DistKind::gamma) {
      const double shape = 1.0 / (cv * cv);
      dist_ = std::gamma_distribution<double>(shape, mean / shape);
    } else {
      const double s2 = std::log1p(cv * cv);
      dist_ = std::lognormal_distribution<double>(std::log(mean) - 0.5 * s2, std::sqrt(s2));
    }
  }

  template <class Urbg>
  double operator()(Urbg& g) {
    return std::visit(
        [&](auto& d) -> double {
          if constexpr (std::is_same_v<std::decay_t<decltype(d)>, std::monostate>) return mean_;
          else return d(g);
        },
        dist_);
  }

  double mean() const { return mean_; }

 private:
  double mean_ = 1.0;
  std::variant<std::monostate, std::exponential_distribution<double>, std::gamma_distribution<double>,
               std::lognormal_distribution<double>>
      dist_;
};

inline Sampler interarrival_sampler(const JobType& jt) {
  return Sampler(jt.arrival_dist, 1.0 / jt.arrival_rate, jt.arrival_cv);
}

inline Sampler service_sampler(const JobType& jt) {
  return Sampler(jt.service_dist, 1.0 / jt.service_rate, jt.service_cv);
}

}  // namespace collab
