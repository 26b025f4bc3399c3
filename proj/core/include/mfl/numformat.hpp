#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

namespace mfl {

// Shortest decimal representation that round-trips to the same double.
// Used for all CSV output so that files are diffable and reload bit-exact.
inline std::string fmt_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double x = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), x);
  return x;
}

// FNV-1a, 64 bit. Checksum for the run manifest.
inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace mfl
