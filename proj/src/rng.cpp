#include "netx/rng.hpp"

#include <cmath>
#include <numbers>

namespace netx::rng {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index ^ 0xa0761d6478bd642fULL));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  // FNV-1a over the label, then mixed with the master seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ 0xe7037ed1a0b428dbULL) ^ h);
}

std::uint64_t bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  std::uint64_t key = splitmix64(seed ^ splitmix64(stream * 0x8ebc6af09c88c6e3ULL + 1));
  return splitmix64(key + splitmix64(counter ^ 0x589965cc75374cc3ULL));
}

double Stream::normal() {
  // Box-Muller; u1 is kept away from zero.
  double u1 = (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Stream::below(std::uint64_t n) {
  if (n <= 1) return 0;
  // Lemire rejection keeps the draw unbiased.
  std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    std::uint64_t r = (*this)();
    __uint128_t m = static_cast<__uint128_t>(r) * n;
    if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
  }
}

}  // namespace netx::rng
