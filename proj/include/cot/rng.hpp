#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cot {

// splitmix64; used to derive decorrelated stream seeds from a user seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Seed for the i-th independent substream of `seed` (rows, batches, targets).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ (0x9E3779B97F4A7C15ull * (index + 1)));
}

// Deterministic generator built on std::mt19937_64, whose output sequence is
// fixed by the C++ standard. All derived draws below avoid libstdc++
// distribution objects, whose streams are not pinned down by the standard,
// so identical seeds give identical data on any conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1): 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1p-53;
  }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1p-53;
  }

  // Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  // One standard normal via Box-Muller; the second value of each pair is
  // cached, so draws come in a fixed order.
  double normal();

  // Fisher-Yates; identical result for identical seed on all platforms.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

inline double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

}  // namespace cot
