#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace verdict {

// Deterministic RNG with cheap substream derivation. Every parallel unit of
// work (tree, fold, matrix, simulation cell) owns a stream derived from
// (seed, tag, index), so results do not depend on thread scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // Warm up so that small seeds do not produce correlated first draws.
    next();
    next();
  }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag,
                              std::uint64_t index = 0) {
    std::uint64_t x = seed;
    x ^= 0x9e3779b97f4a7c15ULL + tag;
    x = splitmix(x);
    x ^= 0xbf58476d1ce4e5b9ULL + index;
    x = splitmix(x);
    return x;
  }

  static Rng substream(std::uint64_t seed, std::uint64_t tag,
                       std::uint64_t index = 0) {
    return Rng(derive(seed, tag, index));
  }

  std::uint64_t next() {
    state_ = splitmix(state_ + 0x9e3779b97f4a7c15ULL);
    return state_;
  }

  // Uniform in [0, 1) with 53 bits of randomness.
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  int uniform_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(uniform_index(
                    static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double normal() {
    // Box-Muller; one value per call keeps the stream position predictable.
    double u1 = u01();
    double u2 = u01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k && i < n; ++i) {
      std::size_t j = i + static_cast<std::size_t>(uniform_index(n - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
  }

  std::uint64_t state_;
};

}  // namespace verdict
