#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace weakform {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Mixes a parent seed with a stream index; used to derive per-trial seeds
/// so results do not depend on execution order.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ull + 1));
}

inline constexpr std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Seeded generator with platform-independent bounded draws.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// standard distributions are not, so bounded integers are produced here by
/// rejection sampling on the raw 64-bit stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform(std::uint64_t bound) {
    if (bound <= 1) return 0;
    // Largest multiple of bound representable; reject the tail.
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound + 1) % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x > limit);
    return x % bound;
  }

  bool bit() { return engine_() >> 63; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace weakform
