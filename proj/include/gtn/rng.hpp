#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace gtn {

/// Seeded random stream with a fully specified algorithm.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Distribution transforms are implemented here rather than
/// through <random> distributions, whose algorithms are unspecified and
/// differ across standard libraries:
///  - uniform01: top 53 bits, offset by half an ulp, so values lie in (0, 1);
///  - normal: basic (trigonometric) Box-Muller, second value of each pair cached;
///  - index: rejection sampling on the top bits, unbiased.
/// A stream is single-owner; derive independent streams with split().
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi);
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  /// Independent child stream; same (seed, stream_id) always gives the same child.
  Rng split(std::uint64_t stream_id) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

/// SplitMix64 finalizer, used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Fisher-Yates permutation of 0..n-1 driven by `rng`.
std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n);

}  // namespace gtn
