#pragma once

#include <cstdint>

namespace ensen {

// Counter-based SplitMix64 stream (Steele, Lea & Flood). The n-th output is a
// pure function of (seed, n), so any draw is reproducible across platforms and
// compilers. Doubles are built from the top 53 bits.
class Splitmix64 {
public:
  explicit Splitmix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on [-1/2, 1/2), zero mean.
  double next_symmetric() { return next_uniform() - 0.5; }

  // Independent stream for sub-task `index`. Index 0 reproduces the base
  // stream, so a run with one sub-task is bitwise identical to the plain run.
  static Splitmix64 derived(std::uint64_t seed, std::uint64_t index) {
    return Splitmix64(seed + index * 0xD1342543DE82EF95ULL);
  }

private:
  std::uint64_t state_;
};

} // namespace ensen
