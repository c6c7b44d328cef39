#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

// Deterministic RNG with implementation-independent distributions.
// std::uniform_*_distribution output is implementation-defined, so the
// draws are produced here directly from the raw 64-bit stream.

namespace bopo {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Combine a base seed with stream coordinates (step, instance, sample, ...)
// into an independent stream seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(base ^ 0x6a09e667f3bcc909ull);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  return splitmix64(s ^ c);
}

// xoshiro256** ; seeded via splitmix64 per the reference recipe.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t x = seed;
    for (auto& w : s_) w = (x = splitmix64(x));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [lo, hi], inclusive; unbiased via rejection
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = std::uint64_t(hi) - std::uint64_t(lo) + 1;
    if (span == 0) return std::int64_t(next_u64());  // full 64-bit range
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return lo + std::int64_t(r % span);
  }

  // Fisher-Yates shuffle
  template <class T>
  void shuffle(std::span<T> xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = std::size_t(uniform_int(0, std::int64_t(i) - 1));
      std::swap(xs[i - 1], xs[j]);
    }
  }

  // Draw an index from unnormalized nonnegative weights by CDF inversion.
  // The scan order makes the draw deterministic given the stream.
  std::size_t categorical(std::span<const double> w) {
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0)) throw std::domain_error("categorical: no positive mass");
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      acc += w[i];
      if (u < acc) return i;
    }
    for (std::size_t i = w.size(); i-- > 0;)
      if (w[i] > 0.0) return i;
    return 0;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

}  // namespace bopo
