#pragma once

#include <cstdint>
#include <random>

namespace mfl {

// splitmix64 finalizer; used to derive statistically independent streams
// from (seed, stream index) pairs. Replica r always gets the same stream
// no matter how work is scheduled across workers.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream)));
}

inline double uniform01(std::mt19937_64& rng) {
  // 53-bit mantissa draw, identical on every platform.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace mfl
