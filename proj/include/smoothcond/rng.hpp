#pragma once

#include <cstdint>
#include <limits>

namespace smoothcond {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the independent stream used by sample number `index` of a run.
constexpr std::uint64_t stream_seed(std::uint64_t run_seed, std::uint64_t index) {
  return mix64(run_seed ^ mix64(index ^ 0x243f6a8885a308d3ULL));
}

/// Counter-based generator: the k-th output is a pure function of (key, k), so
/// a stream can be rebuilt anywhere from its key alone. Satisfies
/// UniformRandomBitGenerator. Normal variates use Box-Muller on 53-bit
/// uniforms so results do not depend on the standard library's distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform on (0, 1].
  double uniform() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal.
  double normal();

  /// +1 or -1 with equal probability.
  int sign() { return ((*this)() >> 63) ? 1 : -1; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace smoothcond
