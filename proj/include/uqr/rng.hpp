#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace uqr {

// Counter-based generator: draw i of a stream is a stateless hash of
// (key, i), so identical seeds give identical sequences on every platform
// and child streams are independent by construction. One stream per
// ensemble member and one per data shuffle keeps trainings decoupled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed, 0x1905725e1fb1fc3aULL)) {}

  std::uint64_t next_u64() { return mix(key_, counter_++); }

  // uniform on [0,1) with 53-bit resolution
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // standard normal via Box-Muller; consumes two draws per call
  double normal() {
    double u1 = 1.0 - uniform01();  // (0,1], keeps the log finite
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // unbiased integer on [0,n), by rejection of the top partial block
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t rem = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t x = next_u64();
      if (rem == 0 || x < 0 - rem) return x % n;
    }
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

  // independent stream; derivation is keyed separately from output
  Rng child(std::uint64_t stream) const {
    Rng c(0);
    c.key_ = mix(key_ ^ 0x94d3c8cd34f5d7d5ULL, stream);
    c.counter_ = 0;
    return c;
  }

  std::uint64_t key() const { return key_; }

 private:
  // splitmix64 finalizer over key + golden-ratio-spaced counter
  static std::uint64_t mix(std::uint64_t key, std::uint64_t ctr) {
    std::uint64_t z = key + 0x9e3779b97f4a7c15ULL * (ctr + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace uqr
