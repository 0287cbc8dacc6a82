#ifndef MAADA_RNG_HPP
#define MAADA_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace maada {

// Seedable PRNG used for every random draw in the library. The raw stream is
// std::mt19937_64 (whose output sequence is fixed by the C++ standard); the
// derived draws below avoid std::*_distribution so that the exact values are
// reproducible across standard library implementations.
class Rng {
 public:
  // Recorded in run manifests so outputs can be reproduced elsewhere.
  static constexpr const char* kAlgorithmId = "mt19937_64/u53/box-muller/fisher-yates";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform index in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(uniform01() * static_cast<double>(n));
  }

  // Fisher-Yates, front to back.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    if (items.size() < 2) return;
    for (std::size_t i = 0; i + 1 < items.size(); ++i) {
      const std::size_t j = i + uniform_index(items.size() - i);
      std::swap(items[i], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// SplitMix64 mix step; used to derive independent child seeds from one master
// seed so that unrelated consumers never share a stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace maada

#endif
