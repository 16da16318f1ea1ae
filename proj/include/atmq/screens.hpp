#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "atmq/errors.hpp"
#include "atmq/fft.hpp"
#include "atmq/grid.hpp"
#include "atmq/math.hpp"
#include "atmq/rng.hpp"
#include "atmq/turbulence.hpp"

namespace atmq {

/// Ring partition of the 2-D spectral domain [K_min, K_max]: geometric
/// boundaries K_0..K_N and per-ring weights
///   s_n = 2 pi Int_{K_{n-1}}^{K_n} dk k Phi_phi(k),
/// i.e. half the phase variance carried by ring n (the full variance of the
/// band is 2 * sum s_n, see sample_sparse_screen for how the factor returns).
struct SpectralRings {
  std::vector<double> K;  ///< N+1 boundaries (1/m), strictly increasing
  std::vector<double> s;  ///< N ring weights (rad^2)

  std::size_t rings() const { return s.size(); }

  void validate() const {
    if (s.empty() || K.size() != s.size() + 1)
      throw ConfigError("spectral rings: boundary/weight size mismatch");
    for (std::size_t i = 0; i + 1 < K.size(); ++i)
      if (!(K[i] < K[i + 1])) throw ConfigError("spectral rings: boundaries not increasing");
    for (double w : s)
      if (!(w >= 0.0)) throw ConfigError("spectral rings: negative weight");
  }
};

/// One random phase screen in sparse-spectrum form: N harmonics with complex
/// amplitudes (rad) and wave vectors (1/m).
struct SparseScreen {
  std::vector<std::complex<double>> a;
  std::vector<double> kx;
  std::vector<double> ky;

  std::size_t size() const { return a.size(); }
};

/// Ring decomposition of the screen spectrum for one slab of thickness l (m).
/// Boundaries follow the geometric progression
/// K_n = K_min exp[(n/N) ln(K_max/K_min)].
inline SpectralRings build_rings(const TurbulenceParams& turb, const OpticalParams& optics,
                                 double l, std::size_t n_rings, double k_min, double k_max) {
  turb.validate();
  optics.validate();
  if (n_rings < 1) throw ConfigError("ring count must be >= 1");
  if (!(k_min > 0.0) || !(k_min < k_max))
    throw ConfigError("ring bounds must satisfy 0 < K_min < K_max");

  SpectralRings r;
  r.K.resize(n_rings + 1);
  r.s.resize(n_rings);
  const double lg = std::log(k_max / k_min);
  for (std::size_t n = 0; n <= n_rings; ++n)
    r.K[n] = k_min * std::exp(static_cast<double>(n) / static_cast<double>(n_rings) * lg);
  r.K[0] = k_min;
  r.K[n_rings] = k_max;

  for (std::size_t n = 0; n < n_rings; ++n) {
    const double lo = r.K[n], hi = r.K[n + 1];
    // integrate in log k: Int dk k Phi = Int dt k^2 Phi, t = ln k
    const double val = math::integrate(
      [&](double t) {
        const double kap = std::exp(t);
        return kap * kap * phase_psd(kap, turb, optics, l);
      },
      std::log(lo), std::log(hi), 1e-10);
    r.s[n] = 2.0 * math::pi * val;
  }
  return r;
}

/// Draw one sparse-spectrum screen. Per ring, in ascending ring order, the
/// stream is consumed as: one normal pair (Re a, Im a), one uniform for the
/// squared-modulus position inside the ring, one uniform for the polar angle.
///
/// Components are drawn with variance s_n each. The synthesis
/// phi(r) = Re sum a_n e^{i k_n r} then has ensemble covariance
///   C(dr) = (1/2) sum <|a_n|^2> <cos(k_n dr)> = sum s_n <cos(k_n dr)>,
/// which reproduces the band integral 2 pi Int dk k Phi_phi(k) J0(k dr) of
/// the target spectrum as the rings become thin; in particular
/// C(0) = 2 sum s_n equals the band-limited phase variance.
inline SparseScreen sample_sparse_screen(const SpectralRings& rings, RngStream& rng) {
  rings.validate();
  SparseScreen s;
  const std::size_t n = rings.rings();
  s.a.resize(n);
  s.kx.resize(n);
  s.ky.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = rng.normal_pair();
    const double sd = std::sqrt(rings.s[i]);
    s.a[i] = {sd * g[0], sd * g[1]};
    const double lo2 = rings.K[i] * rings.K[i];
    const double hi2 = rings.K[i + 1] * rings.K[i + 1];
    const double kap = std::sqrt(lo2 + rng.uniform() * (hi2 - lo2));
    const double ang = 2.0 * math::pi * rng.uniform();
    s.kx[i] = kap * std::cos(ang);
    s.ky[i] = kap * std::sin(ang);
  }
  return s;
}

/// Exact single-point evaluation phi(x, y) = Re sum a_n e^{i(kx x + ky y)}.
/// Reference implementation for tests and for point statistics; O(N) per call.
inline double evaluate_screen_at(const SparseScreen& s, double x, double y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double ph = s.kx[i] * x + s.ky[i] * y;
    acc += s.a[i].real() * std::cos(ph) - s.a[i].imag() * std::sin(ph);
  }
  return acc;
}

namespace detail {

/// Fill re/im with e^{i k c_j} for the n grid coordinates c_j = (j - n/2) h.
/// Phasor recurrence with an exact std::polar resync every 16 steps keeps the
/// error a few ULP, far below the 1e-12 budget against direct evaluation.
inline void fill_phasors(double k, const GridSpec& g, double* re, double* im) {
  const std::size_t n = g.n;
  const double dstep_r = std::cos(k * g.step), dstep_i = std::sin(k * g.step);
  double cr = 0.0, ci = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if ((j & 15u) == 0) {
      const double ph = k * g.coord(j);
      cr = std::cos(ph);
      ci = std::sin(ph);
    }
    re[j] = cr;
    im[j] = ci;
    const double nr = cr * dstep_r - ci * dstep_i;
    ci = cr * dstep_i + ci * dstep_r;
    cr = nr;
  }
}

}  // namespace detail

/// Evaluate a sparse screen on the full grid, row-major (y outer, x inner).
/// Harmonics factorize as e^{i(kx x + ky y)} = e^{i ky y} e^{i kx x}, so the
/// screen is accumulated from per-axis phasor tables in blocks of harmonics
/// small enough to stay cache resident.
inline std::vector<double> evaluate_screen(const SparseScreen& s, const GridSpec& grid) {
  grid.validate();
  const std::size_t n = grid.n;
  std::vector<double> phi(n * n, 0.0);
  constexpr std::size_t kBlock = 16;
  std::vector<double> exr(kBlock * n), exi(kBlock * n), eyr(kBlock * n), eyi(kBlock * n);

  for (std::size_t b0 = 0; b0 < s.size(); b0 += kBlock) {
    const std::size_t nb = std::min(kBlock, s.size() - b0);
    for (std::size_t b = 0; b < nb; ++b) {
      detail::fill_phasors(s.kx[b0 + b], grid, &exr[b * n], &exi[b * n]);
      detail::fill_phasors(s.ky[b0 + b], grid, &eyr[b * n], &eyi[b * n]);
    }
    // Two output rows per pass so each phasor row is read once per two row
    // updates (the grid side is a power of two, so 2 always divides n).
    for (std::size_t iy = 0; iy < n; iy += 2) {
      double* __restrict__ o0 = &phi[iy * n];
      double* __restrict__ o1 = o0 + n;
      for (std::size_t b = 0; b < nb; ++b) {
        const double ar = s.a[b0 + b].real(), ai = s.a[b0 + b].imag();
        const double* yr = &eyr[b * n + iy];
        const double* yi = &eyi[b * n + iy];
        // c = a * e^{i ky y}; then phi += Re(c * e^{i kx x})
        const double cr0 = ar * yr[0] - ai * yi[0], ci0 = ar * yi[0] + ai * yr[0];
        const double cr1 = ar * yr[1] - ai * yi[1], ci1 = ar * yi[1] + ai * yr[1];
        const double* __restrict__ xr = &exr[b * n];
        const double* __restrict__ xi = &exi[b * n];
        for (std::size_t j = 0; j < n; ++j) {
          const double r = xr[j], im = xi[j];
          o0[j] += cr0 * r - ci0 * im;
          o1[j] += cr1 * r - ci1 * im;
        }
      }
    }
  }
  return phi;
}

/// Spectral-filtering screen on the DFT frequency grid: each mode gets an
/// independent complex normal amplitude with
/// <|A_k|^2> = 2 Phi_phi(|k|) dk^2, and phi = Re of the unnormalized
/// synthesis sum, so the ensemble covariance is the Riemann sum of the
/// spectrum over the grid band. Modes are drawn row-major (ky outer, kx
/// inner), one normal pair each, DC included. Cannot represent fluctuations
/// below the grid's fundamental frequency; kept for method comparison.
inline std::vector<double> sample_fft_screen(const TurbulenceParams& turb,
                                             const OpticalParams& optics, double l,
                                             const GridSpec& grid, RngStream& rng,
                                             Fft2d* fft = nullptr) {
  grid.validate();
  const std::size_t n = grid.n;
  const double dk = grid.kstep();
  std::vector<std::complex<double>> amp(n * n);
  for (std::size_t iy = 0; iy < n; ++iy) {
    const double ky = grid.kfreq(iy);
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double kx = grid.kfreq(ix);
      const double kap = std::hypot(kx, ky);
      const auto g = rng.normal_pair();
      const double sd = std::sqrt(phase_psd(kap, turb, optics, l)) * dk;
      amp[iy * n + ix] = {sd * g[0], sd * g[1]};
    }
  }
  std::vector<double> phi(n * n);
  if (fft) {
    fft->backward_raw(amp);
  } else {
    Fft2d local(n);
    local.backward_raw(amp);
  }
  for (std::size_t i = 0; i < n * n; ++i) phi[i] = amp[i].real();
  return phi;
}

/// FFT screen augmented with low-frequency patches: level p adds the 3x3
/// modes (i, j) dk/3^p, (i, j) in {-1,0,1}^2 without the origin, each with
/// an independent complex normal amplitude of mean square
/// 2 Phi_phi(|k|) (dk/3^p)^2, evaluated directly on the grid. Levels are
/// drawn after the FFT modes, in ascending p, modes row-major; with
/// n_levels = 0 the result is exactly sample_fft_screen.
inline std::vector<double> sample_subharmonic_screen(const TurbulenceParams& turb,
                                                      const OpticalParams& optics, double l,
                                                      const GridSpec& grid,
                                                      std::size_t n_levels, RngStream& rng,
                                                      Fft2d* fft = nullptr) {
  std::vector<double> phi = sample_fft_screen(turb, optics, l, grid, rng, fft);
  const std::size_t n = grid.n;
  std::vector<double> exr(n), exi(n), eyr(n), eyi(n);
  double dkp = grid.kstep();
  for (std::size_t p = 1; p <= n_levels; ++p) {
    dkp /= 3.0;
    for (int iy = -1; iy <= 1; ++iy) {
      for (int ix = -1; ix <= 1; ++ix) {
        if (ix == 0 && iy == 0) continue;
        const double kx = ix * dkp, ky = iy * dkp;
        const double kap = std::hypot(kx, ky);
        const auto g = rng.normal_pair();
        const double sd = std::sqrt(phase_psd(kap, turb, optics, l)) * dkp;
        const double ar = sd * g[0], ai = sd * g[1];
        detail::fill_phasors(kx, grid, exr.data(), exi.data());
        detail::fill_phasors(ky, grid, eyr.data(), eyi.data());
        for (std::size_t r = 0; r < n; ++r) {
          const double cr = ar * eyr[r] - ai * eyi[r];
          const double ci = ar * eyi[r] + ai * eyr[r];
          double* out = &phi[r * n];
          for (std::size_t j = 0; j < n; ++j) out[j] += cr * exr[j] - ci * exi[j];
        }
      }
    }
  }
  return phi;
}

/// Mean squared increment of sampled screens at the given separations, which
/// must be axis-aligned multiples of the grid step. Averages over all pair
/// positions, both axes, and all screens supplied by the generator.
/// The generator is called once per screen index, 0..n_screens-1.
inline std::vector<double> empirical_structure_function(
  std::size_t n_screens, const std::function<std::vector<double>(std::size_t)>& generator,
  const GridSpec& grid, const std::vector<double>& separations) {
  if (n_screens == 0) throw ConfigError("structure function needs at least one screen");
  grid.validate();
  const std::size_t n = grid.n;

  std::vector<std::size_t> steps(separations.size());
  for (std::size_t i = 0; i < separations.size(); ++i) {
    const double raw = std::abs(separations[i]) / grid.step;
    const double rounded = std::round(raw);
    if (rounded < 1.0 || rounded >= static_cast<double>(n) ||
      std::abs(raw - rounded) > 1e-9 * std::max(1.0, raw))
      throw ConfigError("separation " + std::to_string(separations[i]) +
                        " is not a representable multiple of the grid step");
    steps[i] = static_cast<std::size_t>(rounded);
  }

  std::vector<double> acc(separations.size(), 0.0);
  std::vector<double> cnt(separations.size(), 0.0);
  for (std::size_t sidx = 0; sidx < n_screens; ++sidx) {
    const std::vector<double> phi = generator(sidx);
    if (phi.size() != n * n) throw ConfigError("generated screen does not match the grid");
    for (std::size_t t = 0; t < steps.size(); ++t) {
      const std::size_t d = steps[t];
      double a = 0.0;
      for (std::size_t iy = 0; iy < n; ++iy) {
        const double* row = &phi[iy * n];
        for (std::size_t j = 0; j + d < n; ++j) {
          const double diff = row[j] - row[j + d];
          a += diff * diff;
        }
      }
      for (std::size_t iy = 0; iy + d < n; ++iy) {
        const double* ra = &phi[iy * n];
        const double* rb = &phi[(iy + d) * n];
        for (std::size_t j = 0; j < n; ++j) {
          const double diff = ra[j] - rb[j];
          a += diff * diff;
        }
      }
      acc[t] += a;
      cnt[t] += 2.0 * static_cast<double>(n) * static_cast<double>(n - d);
    }
  }
  std::vector<double> out(separations.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = acc[t] / cnt[t];
  return out;
}

/// Convenience overload for a pre-generated ensemble.
inline std::vector<double> empirical_structure_function(
  const std::vector<std::vector<double>>& screens, const GridSpec& grid,
  const std::vector<double>& separations) {
  return empirical_structure_function(
    screens.size(), [&](std::size_t i) { return screens[i]; }, grid, separations);
}

/// Debug dump: raw row-major little-endian doubles plus a sidecar text header
/// (same path with ".txt" appended) recording the grid and a caller label.
inline void write_screen_dump(const std::string& path, const std::vector<double>& phi,
                              const GridSpec& grid, const std::string& label) {
  if (phi.size() != grid.size()) throw ConfigError("screen dump: size does not match grid");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing");
  const std::size_t written = std::fwrite(phi.data(), sizeof(double), phi.size(), f);
  std::fclose(f);
  if (written != phi.size()) throw IoError("short write to " + path);

  std::FILE* h = std::fopen((path + ".txt").c_str(), "w");
  if (!h) throw IoError("cannot open " + path + ".txt for writing");
  std::fprintf(h, "points_per_axis %zu\nstep_m %.17g\nlabel %s\n", grid.n, grid.step,
               label.c_str());
  std::fclose(h);
}

}  // namespace atmq
