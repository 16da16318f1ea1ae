#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

namespace atmq {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Deterministic random stream addressed by (master_seed, stream index).
/// Conversions to uniform/normal are written out here so byte-level
/// reproducibility does not depend on standard-library distribution
/// internals; mt19937_64 itself is fully specified by the standard.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t s = master_seed ^ (0xA0761D6478BD642Full * (index + 1));
    const std::uint64_t a = detail::splitmix64(s);
    const std::uint64_t b = detail::splitmix64(s);
    gen_.seed(a ^ (b << 1));
  }

  static RngStream derive(std::uint64_t master_seed, std::uint64_t index) {
    return RngStream(master_seed, index);
  }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe as a logarithm argument.
  double uniform_pos() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  /// Box-Muller pair of independent standard normals.
  std::array<double, 2> normal_pair() {
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double t = 2.0 * 3.14159265358979323846 * uniform();
    return {r * std::cos(t), r * std::sin(t)};
  }

  double normal() { return normal_pair()[0]; }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace atmq
