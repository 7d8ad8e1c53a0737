#pragma once

#include <cstdint>

namespace vdmforge {

// Counter-based splitmix64 stream. value(i) depends only on (seed, i), so any
// subsequence can be evaluated out of order or in parallel while still
// matching the single-threaded draw sequence. The exact algorithm is part of
// the file-format documentation: outputs must be stable across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : seed_(seed) {}

  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // i-th raw 64-bit value of the stream.
  uint64_t value(uint64_t i) const { return mix(seed_ + i * 0x9e3779b97f4a7c15ull); }

  // i-th double in [0,1), using the top 53 bits.
  double uniform(uint64_t i) const {
    return static_cast<double>(value(i) >> 11) * 0x1.0p-53;
  }

  // Sequential interface.
  uint64_t next() { return value(counter_++); }
  double next_uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  uint64_t seed() const { return seed_; }

  // Derives an independent stream for a named purpose.
  SplitMix64 fork(uint64_t stream_id) const {
    return SplitMix64(mix(seed_ ^ (0x6a09e667f3bcc909ull + stream_id)));
  }

 private:
  uint64_t seed_;
  uint64_t counter_ = 0;
};

}  // namespace vdmforge
