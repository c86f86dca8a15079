#pragma once

#include <cstdint>
#include <random>

namespace herbage {

/// One SplitMix64 step (Steele, Lea & Flood): the generator output for
/// state x. Full avalanche on 64 bits.
std::uint64_t mix64(std::uint64_t x);

/// Seed for one work item, derived from the run's master seed and the
/// item index. Independent of scheduling, so parallel runs reproduce
/// serial ones: derive_seed(m, i) = mix64(m ^ mix64(i + 0x9E3779B97F4A7C15)).
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

/// Deterministic random source. The engine sequence is fixed by the
/// standard; the distributions below are implemented here so draws are
/// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi], unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Uniform index in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Gamma(shape, 1) via Marsaglia & Tsang.
  double gamma(double shape);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

template <typename Vec>
void shuffle(Vec& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.index(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace herbage
