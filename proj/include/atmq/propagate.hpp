#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "atmq/config.hpp"
#include "atmq/errors.hpp"
#include "atmq/fft.hpp"
#include "atmq/field.hpp"
#include "atmq/rng.hpp"
#include "atmq/screens.hpp"

namespace atmq {

namespace detail {

// Separable angular-spectrum factors exp(-i dz kx^2 / (2 k0)) for one axis.
inline std::vector<std::complex<double>> vacuum_axis(const GridSpec& grid,
                                                     double dz,
                                                     const OpticalParams& optics) {
  const double k0 = optics.wavenumber();
  std::vector<std::complex<double>> axis(grid.n);
  for (std::size_t j = 0; j < grid.n; ++j) {
    const double kappa = grid.kfreq(j);
    axis[j] = std::polar(1.0, -dz * kappa * kappa / (2.0 * k0));
  }
  return axis;
}

inline void apply_spectral_axes(ComplexField& f,
                                const std::vector<std::complex<double>>& axis,
                                Fft2d& fft) {
  fft.forward(f.a);
  const std::size_t n = f.grid.n;
  for (std::size_t iy = 0; iy < n; ++iy) {
    const std::complex<double> ey = axis[iy];
    std::complex<double>* row = f.a.data() + iy * n;
    for (std::size_t ix = 0; ix < n; ++ix) row[ix] *= ey * axis[ix];
  }
  fft.backward(f.a);
}

}  // namespace detail

// Free-space step over dz (any sign, 0 is the identity).
inline void vacuum_propagate(ComplexField& f, double dz, const OpticalParams& optics, Fft2d& fft) {
  if (dz == 0.0) return;
  const auto axis = detail::vacuum_axis(f.grid, dz, optics);
  detail::apply_spectral_axes(f, axis, fft);
  f.z += dz;
}

// Split-operator channel: each slab is vacuum l/2, phase screen, vacuum l/2,
// with adjacent vacuum half-steps merged when no boundary mask is applied.
// Holds the ring table and FFT plans so repeated samples reuse them.
// Not thread safe; use one instance per worker.
class Propagator {
 public:
  explicit Propagator(const ChannelConfig& config)
      : cfg_(config), fft_(config.grid.n), has_screens_(config.turbulence.cn2 > 0.0) {
    cfg_.validate();
    const double l = cfg_.slab_length();
    if (has_screens_) {
      rings_ = build_rings(cfg_.turbulence, cfg_.optics, l, cfg_.rings.count,
                           cfg_.rings.resolved_k_min(cfg_.turbulence),
                           cfg_.rings.resolved_k_max(cfg_.turbulence));
    }
    half_axis_ = detail::vacuum_axis(cfg_.grid, 0.5 * l, cfg_.optics);
    full_axis_ = detail::vacuum_axis(cfg_.grid, l, cfg_.optics);
  }

  const ChannelConfig& config() const { return cfg_; }
  const SpectralRings& rings() const { return rings_; }

  // One channel realization: returns the field at the aperture plane.
  // Screen draws consume rng in slab order, so equal seeds give equal fields.
  ComplexField propagate(RngStream& rng) {
    ComplexField f = make_gaussian_beam(cfg_.beam, cfg_.optics, cfg_.grid);
    const double power_in = field_power(f);
    const double l = cfg_.slab_length();
    const std::size_t m = cfg_.n_screens;

    if (!has_screens_ && !cfg_.boundary_mask) {
      vacuum_propagate(f, cfg_.z_ap, cfg_.optics, fft_);
    } else if (cfg_.boundary_mask) {
      for (std::size_t i = 0; i < m; ++i) {
        step(f, half_axis_, 0.5 * l);
        if (has_screens_) apply_screen(f, rng);
        step(f, half_axis_, 0.5 * l);
        apply_boundary_mask(f);
      }
    } else {
      step(f, half_axis_, 0.5 * l);
      for (std::size_t i = 0; i < m; ++i) {
        apply_screen(f, rng);
        const bool last = (i + 1 == m);
        step(f, last ? half_axis_ : full_axis_, last ? 0.5 * l : l);
      }
    }

    const double power_out = field_power(f);
    if (power_out < 0.8 * power_in) {
      throw NumericalError(
          "propagate: more than 20% of the beam power left the grid before the "
          "aperture plane; enlarge the grid or reduce the step");
    }
    return f;
  }

 private:
  void step(ComplexField& f, const std::vector<std::complex<double>>& axis, double dz) {
    detail::apply_spectral_axes(f, axis, fft_);
    f.z += dz;
  }

  void apply_screen(ComplexField& f, RngStream& rng) {
    const SparseScreen s = sample_sparse_screen(rings_, rng);
    const std::vector<double> phi = evaluate_screen(s, cfg_.grid);
    apply_phase(f, phi);
  }

  ChannelConfig cfg_;
  SpectralRings rings_;
  Fft2d fft_;
  std::vector<std::complex<double>> half_axis_;
  std::vector<std::complex<double>> full_axis_;
  bool has_screens_;
};

// One-shot convenience wrapper; prefer a long-lived Propagator in loops.
inline ComplexField propagate_channel(const ChannelConfig& config, RngStream& rng) {
  Propagator p(config);
  return p.propagate(rng);
}

}  // namespace atmq
