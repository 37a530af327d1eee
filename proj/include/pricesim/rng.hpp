#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace pricesim {

// FNV-1a 64-bit. Used wherever a stable, implementation-independent hash is
// needed (A/B arm assignment, per-itinerary substreams, booking rolls).
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline constexpr std::uint64_t fnv1a64(std::string_view s,
                                       std::uint64_t h = kFnvOffset) {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

inline constexpr std::uint64_t fnv1a64_u64(std::uint64_t v,
                                           std::uint64_t h = kFnvOffset) {
  for (int i = 0; i < 8; ++i) {
    h ^= v & 0xffu;
    h *= kFnvPrime;
    v >>= 8;
  }
  return h;
}

// splitmix64 finalizer: bijective, good avalanche. Used to turn counter
// tuples into i.i.d.-looking 64-bit words without touching engine state.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ b);
}

inline constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b,
                                     std::uint64_t c) {
  return mix64(mix64(a, b) ^ c);
}

inline constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b,
                                     std::uint64_t c, std::uint64_t d) {
  return mix64(mix64(a, b, c) ^ d);
}

// Uniform double in [0, 1) from a 64-bit word (53 usable bits).
inline constexpr double unit_from_bits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Deterministic RNG. mt19937_64 has a fixed, portable output sequence; the
// samplers below are hand-rolled because libstdc++/libc++ distributions are
// not guaranteed to produce identical streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double next_unit() { return unit_from_bits(eng_()); }

  // {0, .., n-1}; n must be > 0. Modulo bias is < 2^-53 for our n.
  std::uint64_t uniform_below(std::uint64_t n) { return eng_() % n; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  double exponential(double mean) {
    // Inverse CDF on (0,1]; 1-u avoids log(0).
    return -mean * std::log(1.0 - next_unit());
  }

  double normal() {
    // Box-Muller, one sample per call (simpler determinism than caching).
    double u1 = 1.0 - next_unit();
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double lognormal(double log_mean, double log_sigma) {
    return std::exp(log_mean + log_sigma * normal());
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace pricesim
