#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace replab {

// Counter-based deterministic RNG built on the splitmix64 finalizer.
//
// Every random draw in the library comes from a stream derived from a key
// tuple (seed, trial, player, round, purpose, ...). Streams are independent
// of evaluation order and thread scheduling, so a run is reproducible
// bit-for-bit at any parallelism level. std::uniform_*_distribution is
// deliberately avoided: its output is implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes two uniforms per call.
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Categorical draw from nonnegative weights (need not be normalized).
  int next_categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double x = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (x < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  int next_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

 private:
  std::uint64_t state_;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace detail

// Key-derivation for hierarchical streams: fold each component through the
// mixer so that (a,b) and (b,a) land in unrelated streams.
inline std::uint64_t derive_key(std::uint64_t key, std::uint64_t part) {
  return detail::mix64(key ^ (part + 0x9e3779b97f4a7c15ull + (key << 6) + (key >> 2)));
}

template <typename... Parts>
std::uint64_t derive_key(std::uint64_t key, std::uint64_t part, Parts... rest) {
  return derive_key(derive_key(key, part), static_cast<std::uint64_t>(rest)...);
}

template <typename... Parts>
RngStream make_stream(std::uint64_t key, Parts... parts) {
  if constexpr (sizeof...(parts) == 0) {
    return RngStream(detail::mix64(key));
  } else {
    return RngStream(derive_key(key, static_cast<std::uint64_t>(parts)...));
  }
}

// FNV-1a over a byte sequence; the planner's documented tie-break hash.
inline std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a_str(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Tie-break hash of (label, round, salt): lowest hash wins among tied candidates.
inline std::uint64_t tie_break_hash(std::string_view label, int round, std::uint64_t salt) {
  std::uint64_t h = fnv1a_str(label);
  unsigned char buf[16];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(round) >> (8 * i)) & 0xff);
  for (int i = 0; i < 8; ++i) buf[8 + i] = static_cast<unsigned char>((salt >> (8 * i)) & 0xff);
  return fnv1a(std::span<const unsigned char>(buf, 16), h);
}

}  // namespace replab
