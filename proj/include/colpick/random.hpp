#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace colpick {

/// Seeded random stream. Only the 64-bit Mersenne Twister engine is taken
/// from the standard library; every transform is spelled out here so that a
/// seed replays the same samples on every platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  bool bernoulli(double p) { return uniform() < p; }

  double normal(double mean, double sd);

  /// Normal restricted to [floor, inf) by rejection.
  double truncated_normal(double mean, double sd, double floor);

  double lognormal(double median, double sigma);

  /// Index drawn proportionally to non-negative `weights`.
  std::size_t discrete(std::span<const double> weights);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Child seed for a (base, tag...) path, e.g. (run seed, task, iteration, worker).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

}  // namespace colpick
