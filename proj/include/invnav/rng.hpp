#pragma once

#include <cstdint>

namespace invnav {

/// Counter-based normal generator.
///
/// Draw k of a stream seeded with s is a pure function of (s, k): a SplitMix64
/// finalizer hashes the counter into two uniforms and Box-Muller maps them to
/// one standard normal. Streams are therefore reproducible across platforms
/// and draws can be skipped without replaying the stream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  double uniform();  // in (0, 1)
  double normal();

  std::uint64_t counter() const { return counter_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t next_bits();

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace invnav
