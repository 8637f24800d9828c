#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ctrace {

/// SplitMix64 finalizer; used to expand seeds and to derive independent
/// streams from (master seed, index...) tuples.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t x);

/// Seed of the stream identified by `path` under `master`. Pure function of
/// its inputs, so per-replicate streams never depend on scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Seed of the stream for a point in parameter space (bit patterns of the
/// coordinates are hashed).
std::uint64_t derive_seed_for_point(std::uint64_t master, std::initializer_list<double> coords);

/// xoshiro256++ generator; satisfies UniformRandomBitGenerator so it plugs
/// into <random> distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on (0, 1], never exactly zero.
  double uniform_pos();
  /// Uniform on [0, 1).
  double uniform();
  double exponential(double rate);
  bool bernoulli(double prob);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  std::uint64_t poisson(double mean);

 private:
  std::array<std::uint64_t, 4> s_;
};

}  // namespace ctrace
