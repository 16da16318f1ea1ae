#pragma once

#include <cstddef>
#include <string>

#include "atmq/errors.hpp"

namespace atmq {

/// Square sampling grid: n x n points with uniform spacing, centered on the
/// beam axis. Point i maps to coordinate (i - n/2) * step, so the axis origin
/// sits on a grid node and the covered extent is n * step per side.
struct GridSpec {
  std::size_t n = 0;    ///< points per axis, power of two, >= 64
  double step = 0.0;    ///< grid spacing (m)

  void validate() const {
    if (n < 64 || (n & (n - 1)) != 0)
      throw ConfigError("grid points_per_axis must be a power of two >= 64, got " +
                        std::to_string(n));
    if (!(step > 0.0))
      throw ConfigError("grid step must be positive");
  }

  std::size_t size() const { return n * n; }

  /// Physical width of the covered square (m).
  double width() const { return static_cast<double>(n) * step; }
  double half_width() const { return 0.5 * width(); }

  /// Coordinate of point i along either axis (m).
  double coord(std::size_t i) const {
    return (static_cast<double>(i) - 0.5 * static_cast<double>(n)) * step;
  }

  /// Smallest coordinate covered by the grid (m).
  double min_coord() const { return coord(0); }
  /// Largest coordinate covered by the grid (m).
  double max_coord() const { return coord(n - 1); }

  /// Angular spatial frequency of DFT index j (1/m), standard wrap-around
  /// layout: indices above n/2 map to negative frequencies.
  double kfreq(std::size_t j) const {
    const auto half = n / 2;
    const double s = (j < half) ? static_cast<double>(j)
                                : static_cast<double>(j) - static_cast<double>(n);
    return s * kstep();
  }

  /// Mode spacing of the DFT frequency grid (1/m).
  double kstep() const { return 2.0 * 3.14159265358979323846 / width(); }

  bool operator==(const GridSpec& o) const { return n == o.n && step == o.step; }
};

}  // namespace atmq
