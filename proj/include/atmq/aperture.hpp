#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "atmq/errors.hpp"
#include "atmq/field.hpp"
#include "atmq/math.hpp"

namespace atmq {

namespace detail {

// Fraction of the square cell at offset (dx, dy) from the disc center that
// lies inside the disc of the given radius. Cells clearly inside or outside
// are resolved by the circumradius test; rim cells use a 4x4 subcell average.
inline double disc_cell_coverage(double dx, double dy, double radius, double step) {
  const double cell_r = 0.5 * step * std::sqrt(2.0);
  const double d = std::sqrt(dx * dx + dy * dy);
  if (d <= radius - cell_r) return 1.0;
  if (d >= radius + cell_r) return 0.0;
  static const double sub[4] = {-0.375, -0.125, 0.125, 0.375};
  int inside = 0;
  for (int sy = 0; sy < 4; ++sy) {
    const double yy = dy + sub[sy] * step;
    for (int sx = 0; sx < 4; ++sx) {
      const double xx = dx + sub[sx] * step;
      if (xx * xx + yy * yy <= radius * radius) ++inside;
    }
  }
  return inside / 16.0;
}

inline void check_disc_fits(const GridSpec& g, double radius, double cx, double cy) {
  const double lo = g.coord(0) - 0.5 * g.step;
  const double hi = g.coord(g.n - 1) + 0.5 * g.step;
  if (cx - radius < lo || cx + radius > hi || cy - radius < lo || cy + radius > hi) {
    throw ConfigError("aperture: disc extends beyond the grid");
  }
}

// Index window [first, last] of grid coordinates within +-reach of c.
inline void disc_index_window(const GridSpec& g, double c, double reach,
                              std::size_t& first, std::size_t& last) {
  const double half_n = 0.5 * static_cast<double>(g.n);
  const double lo = (c - reach) / g.step + half_n;
  const double hi = (c + reach) / g.step + half_n;
  first = static_cast<std::size_t>(std::clamp(std::floor(lo), 0.0, half_n * 2.0 - 1.0));
  last = static_cast<std::size_t>(std::clamp(std::ceil(hi), 0.0, half_n * 2.0 - 1.0));
}

}  // namespace detail

// Integral over the disc of a cell-sampled density (values row-major, y
// outer), with anti-aliased rim cells: sum of coverage * value * step^2.
inline double disc_integral(const std::vector<double>& values, const GridSpec& grid,
                            double radius, double cx, double cy) {
  if (radius < 0.0) throw ConfigError("disc_integral: radius must be non-negative");
  if (radius == 0.0) return 0.0;
  if (values.size() != grid.size()) throw ConfigError("disc_integral: grid shape mismatch");
  detail::check_disc_fits(grid, radius, cx, cy);
  const double reach = radius + 0.5 * grid.step * std::sqrt(2.0);
  std::size_t y0, y1, x0, x1;
  detail::disc_index_window(grid, cy, reach, y0, y1);
  detail::disc_index_window(grid, cx, reach, x0, x1);
  double acc = 0.0;
  for (std::size_t iy = y0; iy <= y1; ++iy) {
    const double dy = grid.coord(iy) - cy;
    const double* row = values.data() + iy * grid.n;
    for (std::size_t ix = x0; ix <= x1; ++ix) {
      const double cover = detail::disc_cell_coverage(grid.coord(ix) - cx, dy, radius, grid.step);
      if (cover > 0.0) acc += cover * row[ix];
    }
  }
  return acc * grid.step * grid.step;
}

// Power collected by a circular aperture: sum of |u|^2 * step^2 over the disc
// with anti-aliased rim cells, clamped to [0, 1]. For a unit-power input this
// is the channel transmittance; boundary-mask losses show up as eta < 1.
inline double transmittance(const ComplexField& f, double radius, double cx, double cy) {
  if (radius < 0.0) throw ConfigError("transmittance: radius must be non-negative");
  if (radius == 0.0) return 0.0;
  const GridSpec& g = f.grid;
  detail::check_disc_fits(g, radius, cx, cy);
  const double reach = radius + 0.5 * g.step * std::sqrt(2.0);
  std::size_t y0, y1, x0, x1;
  detail::disc_index_window(g, cy, reach, y0, y1);
  detail::disc_index_window(g, cx, reach, x0, x1);
  double acc = 0.0;
  for (std::size_t iy = y0; iy <= y1; ++iy) {
    const double dy = g.coord(iy) - cy;
    const std::complex<double>* row = f.a.data() + iy * g.n;
    for (std::size_t ix = x0; ix <= x1; ++ix) {
      const double cover = detail::disc_cell_coverage(g.coord(ix) - cx, dy, radius, g.step);
      if (cover > 0.0) acc += cover * std::norm(row[ix]);
    }
  }
  return std::clamp(acc * g.step * g.step, 0.0, 1.0);
}

struct Centroid {
  double x = 0.0;
  double y = 0.0;
};

// Intensity-weighted first moment of the field.
inline Centroid centroid(const ComplexField& f) {
  const GridSpec& g = f.grid;
  double p = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t iy = 0; iy < g.n; ++iy) {
    const double y = g.coord(iy);
    const std::complex<double>* row = f.a.data() + iy * g.n;
    double rp = 0.0, rmx = 0.0;
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const double w = std::norm(row[ix]);
      rp += w;
      rmx += w * g.coord(ix);
    }
    p += rp;
    mx += rmx;
    my += rp * y;
  }
  if (p <= 0.0) throw NumericalError("centroid: field carries no power");
  return {mx / p, my / p};
}

// Intensity second moments about (x0, y0), normalized by total power and
// scaled by 4 so a Gaussian of width W gives diag(W^2, W^2).
struct SpotMatrix {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
};

inline SpotMatrix spot_matrix(const ComplexField& f, double x0, double y0) {
  const GridSpec& g = f.grid;
  double p = 0.0;
  SpotMatrix s;
  for (std::size_t iy = 0; iy < g.n; ++iy) {
    const double y = g.coord(iy) - y0;
    const std::complex<double>* row = f.a.data() + iy * g.n;
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const double w = std::norm(row[ix]);
      if (w == 0.0) continue;
      const double x = g.coord(ix) - x0;
      p += w;
      s.xx += w * x * x;
      s.xy += w * x * y;
      s.yy += w * y * y;
    }
  }
  if (p <= 0.0) throw NumericalError("spot_matrix: field carries no power");
  const double scale = 4.0 / p;
  s.xx *= scale;
  s.xy *= scale;
  s.yy *= scale;
  return s;
}

// Overloads on a precomputed intensity grid (row-major, y outer), for loops
// that already materialized |u|^2.
inline Centroid centroid(const std::vector<double>& intensity, const GridSpec& g) {
  if (intensity.size() != g.size()) throw ConfigError("centroid: grid shape mismatch");
  double p = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t iy = 0; iy < g.n; ++iy) {
    const double y = g.coord(iy);
    const double* row = intensity.data() + iy * g.n;
    double rp = 0.0, rmx = 0.0;
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      rp += row[ix];
      rmx += row[ix] * g.coord(ix);
    }
    p += rp;
    mx += rmx;
    my += rp * y;
  }
  if (p <= 0.0) throw NumericalError("centroid: field carries no power");
  return {mx / p, my / p};
}

inline SpotMatrix spot_matrix(const std::vector<double>& intensity, const GridSpec& g,
                              double x0, double y0) {
  if (intensity.size() != g.size()) throw ConfigError("spot_matrix: grid shape mismatch");
  double p = 0.0;
  SpotMatrix s;
  for (std::size_t iy = 0; iy < g.n; ++iy) {
    const double y = g.coord(iy) - y0;
    const double* row = intensity.data() + iy * g.n;
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const double w = row[ix];
      if (w == 0.0) continue;
      const double x = g.coord(ix) - x0;
      p += w;
      s.xx += w * x * x;
      s.xy += w * x * y;
      s.yy += w * y * y;
    }
  }
  if (p <= 0.0) throw NumericalError("spot_matrix: field carries no power");
  const double scale = 4.0 / p;
  s.xx *= scale;
  s.xy *= scale;
  s.yy *= scale;
  return s;
}

// Squared ellipse semiaxes of the spot matrix and the angle of the W1 axis.
// W1 takes the "+" eigenvalue branch when Sxy >= 0 and the "-" branch when
// Sxy < 0, which keeps the W1 orientation angle inside [0, math::pi/2).
struct Semiaxes {
  double W1sq = 0.0;
  double W2sq = 0.0;
  double phi = 0.0;
};

inline Semiaxes semiaxes(const SpotMatrix& s) {
  const double mean = 0.5 * (s.xx + s.yy);
  const double diff = 0.5 * (s.xx - s.yy);
  const double root = std::sqrt(diff * diff + s.xy * s.xy);
  const double alpha = 0.5 * std::atan2(2.0 * s.xy, s.xx - s.yy);
  Semiaxes out;
  if (s.xy >= 0.0) {
    out.W1sq = mean + root;
    out.W2sq = mean - root;
    out.phi = alpha;
  } else {
    out.W1sq = mean - root;
    out.W2sq = mean + root;
    out.phi = alpha + 0.5 * math::pi;
  }
  return out;
}

}  // namespace atmq
