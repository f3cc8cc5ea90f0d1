#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace netx::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed for replicate / worker / item `index` of `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Child seed for a labeled substream ("cluster", "assign", "mc", "ri", "sim").
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

// Counter-based draw: a pure function of (seed, stream, counter). Two calls
// with the same key return the same bits regardless of call order.
std::uint64_t bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

// Uniform on [0, 1) with 53 bits of resolution.
inline double to_unit(std::uint64_t b) {
  return static_cast<double>(b >> 11) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return to_unit(bits(seed, stream, counter));
}

// Sequential generator satisfying UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t seed) : state_(splitmix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return to_unit((*this)()); }
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t state_;
};

}  // namespace netx::rng
