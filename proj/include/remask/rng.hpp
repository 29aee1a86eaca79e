#pragma once

#include <cstdint>
#include <initializer_list>

namespace remask {

// Counter-based pseudo-random stream (splitmix64). A stream is fully
// determined by its key, so independent streams keyed by
// (seed, purpose, index...) can be drawn in parallel without any shared
// state, and replayed exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(mix(key ^ kSalt)) {}

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  // Order-sensitive key derivation: key(a,b) != key(b,a).
  static std::uint64_t key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t k = 0x243F6A8885A308D3ULL;
    for (std::uint64_t p : parts) k = mix(k ^ mix(p));
    return k;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1); never returns an exact endpoint.
  double next_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Multiply-shift; deterministic, bias < 2^-64.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Uniform in [lo, hi] inclusive.
  int next_int(int lo, int hi) {
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

 private:
  static constexpr std::uint64_t kSalt = 0xD1B54A32D192ED03ULL;
  std::uint64_t state_;
};

}  // namespace remask
