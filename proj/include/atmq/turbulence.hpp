#pragma once

#include <cmath>

#include "atmq/errors.hpp"
#include "atmq/math.hpp"

namespace atmq {

/// Refractive-index turbulence description (modified von Karman-Tatarskii).
struct TurbulenceParams {
  double cn2;  ///< structure constant (m^-2/3)
  double l0;   ///< inner scale (m)
  double L0;   ///< outer scale (m)

  void validate() const {
    if (!(cn2 > 0.0)) throw ConfigError("turbulence: cn2 must be positive");
    if (!(l0 > 0.0 && l0 < L0)) throw ConfigError("turbulence: need 0 < l0 < L0");
  }
};

struct OpticalParams {
  double wavelength;  ///< (m)

  double wavenumber() const { return 2.0 * math::pi / wavelength; }
  void validate() const {
    if (!(wavelength > 0.0)) throw ConfigError("optics: wavelength must be positive");
  }
};

/// Refractive-index spectral density Phi_n(kappa) (m^3).
inline double spectrum_phi_n(double kappa, const TurbulenceParams& p) {
  const double cut = kappa * p.l0 / (2.0 * math::pi);
  const double denom = kappa * kappa + 1.0 / (p.L0 * p.L0);
  return 0.033 * p.cn2 * std::exp(-cut * cut) * std::pow(denom, -11.0 / 6.0);
}

/// Phase-screen spectral density for one slab of length l (m^2).
inline double phase_psd(double kappa, const TurbulenceParams& p,
                        const OpticalParams& o, double l) {
  if (!(l > 0.0)) throw ConfigError("phase_psd: slab length must be positive");
  const double k = o.wavenumber();
  return 2.0 * math::pi * l * k * k * spectrum_phi_n(kappa, p);
}

/// Rytov parameter sigma_R^2 for a constant-cn2 horizontal path.
inline double rytov_parameter(const TurbulenceParams& p, const OpticalParams& o,
                              double z_ap) {
  if (!(z_ap > 0.0)) throw ConfigError("rytov_parameter: path length must be positive");
  return 1.23 * p.cn2 * std::pow(o.wavenumber(), 7.0 / 6.0) * std::pow(z_ap, 11.0 / 6.0);
}

/// Band-limited phase variance 2*pi*Int kappa*Phi_phi dkappa over [k_lo, k_hi].
inline double phase_variance_band(const TurbulenceParams& p, const OpticalParams& o,
                                  double l, double k_lo, double k_hi) {
  // log-kappa substitution keeps the integrand well scaled across decades
  const double a = std::log(k_lo), b = std::log(k_hi);
  return 2.0 * math::pi *
         math::integrate(
             [&](double u) {
               const double kappa = std::exp(u);
               return kappa * kappa * phase_psd(kappa, p, o, l);
             },
             a, b, 1e-10);
}

/// Theoretical phase-structure function by radial quadrature of the PSD:
/// D_phi(dr) = 4*pi*Int dkappa kappa*Phi_phi(kappa)*(1 - J0(kappa*dr)),
/// integrated over kappa in [1e-4/L0, 10/l0].
inline double structure_function_theory(double delta_r, const TurbulenceParams& p,
                                        const OpticalParams& o, double l) {
  if (delta_r < 0.0) throw ConfigError("structure_function_theory: negative separation");
  if (delta_r == 0.0) return 0.0;
  const double k_lo = 1e-4 / p.L0, k_hi = 10.0 / p.l0;
  const double a = std::log(k_lo), b = std::log(k_hi);
  return 4.0 * math::pi *
         math::integrate(
             [&](double u) {
               const double kappa = std::exp(u);
               return kappa * kappa * phase_psd(kappa, p, o, l) *
                      (1.0 - math::bessel_j0(kappa * delta_r));
             },
             a, b, 1e-8, 0.0, 50);
}

}  // namespace atmq
