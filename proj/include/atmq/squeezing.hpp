#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "atmq/errors.hpp"
#include "atmq/math.hpp"
#include "atmq/pdt.hpp"

namespace atmq {

// Input-state quadrature parameters in shot-noise units (vacuum variance
// 1/2, so the normal-ordered variance is 0 for vacuum and >= -1/2 always).
struct SqueezingInput {
  double normal_ordered_variance_in = 0.0;
  double mean_quadrature_in = 0.0;
  double constant_loss_db = 0.0;

  void validate() const {
    if (!(normal_ordered_variance_in >= -0.5)) {
      throw ConfigError("squeezing input: normal-ordered variance below the vacuum bound -1/2");
    }
    if (!(constant_loss_db >= 0.0)) {
      throw ConfigError("squeezing input: constant loss must be >= 0 dB");
    }
  }

  double loss_factor() const { return std::pow(10.0, -constant_loss_db / 10.0); }
};

struct PostselectionReport {
  double eta_min = 0.0;
  double exceedance = 0.0;        // retained fraction N_min / M
  double mean_eta = 0.0;          // <eta> over retained, loss-scaled samples
  double mean_T_sq_fluct = 0.0;   // <dT^2> = <eta> - <sqrt(eta)>^2
  double variance_out = 0.0;      // total quadrature variance, vacuum = 1/2
  double squeezing_out_db = 0.0;  // 10 log10(variance_out / 0.5)
};

// Mean transmittance over the postselected set {loss_factor * eta_i >=
// eta_min} plus the retained fraction. Constant loss scales every sample
// first; postselection below every sample is an error.
inline std::pair<double, double> postselected_mean_eta(const std::vector<double>& samples,
                                                       double eta_min,
                                                       double loss_factor = 1.0) {
  if (samples.empty()) throw ConfigError("postselection: empty sample list");
  if (!(loss_factor > 0.0) || !(loss_factor <= 1.0)) {
    throw ConfigError("postselection: loss factor must lie in (0, 1]");
  }
  double sum = 0.0;
  std::size_t kept = 0;
  for (double e : samples) {
    const double v = loss_factor * e;
    if (v >= eta_min) {
      sum += v;
      ++kept;
    }
  }
  if (kept == 0) {
    throw NumericalError("postselection: threshold exceeds every sampled transmittance");
  }
  return {sum / static_cast<double>(kept),
          static_cast<double>(kept) / static_cast<double>(samples.size())};
}

// Quadrature variance after the fluctuating-loss channel with postselection:
//   <:dx^2:>_out = <eta> <:dx^2:>_in + <dT^2> <x>_in^2,  T = sqrt(eta).
inline PostselectionReport squeezing_out(const std::vector<double>& samples, double eta_min,
                                         const SqueezingInput& input) {
  input.validate();
  if (samples.empty()) throw ConfigError("squeezing: empty sample list");
  const double lf = input.loss_factor();
  double sum_eta = 0.0, sum_t = 0.0;
  std::size_t kept = 0;
  for (double e : samples) {
    const double v = lf * e;
    if (v >= eta_min) {
      sum_eta += v;
      sum_t += std::sqrt(v);
      ++kept;
    }
  }
  if (kept == 0) {
    throw NumericalError("postselection: threshold exceeds every sampled transmittance");
  }
  PostselectionReport r;
  r.eta_min = eta_min;
  r.exceedance = static_cast<double>(kept) / static_cast<double>(samples.size());
  r.mean_eta = sum_eta / static_cast<double>(kept);
  const double mean_t = sum_t / static_cast<double>(kept);
  r.mean_T_sq_fluct = r.mean_eta - mean_t * mean_t;
  r.variance_out = 0.5 + r.mean_eta * input.normal_ordered_variance_in +
                   r.mean_T_sq_fluct * input.mean_quadrature_in * input.mean_quadrature_in;
  r.squeezing_out_db = 10.0 * std::log10(r.variance_out / 0.5);
  return r;
}

// Model-based counterpart: moments of the postselected law by quadrature.
// Postselecting the loss-scaled transmittance at eta_min is postselecting
// the model variable at eta_min / loss_factor.
inline PostselectionReport squeezing_out(const PdtModel& model, double eta_min,
                                         const SqueezingInput& input) {
  input.validate();
  const double lf = input.loss_factor();
  const double cut = std::max(eta_min / lf, model.support_lo());
  const double hi = model.support_hi();
  if (!(cut < hi)) {
    throw NumericalError("postselection: threshold exceeds the model support");
  }
  const double mass = 1.0 - model.cdf(cut);
  if (!(mass > 0.0)) {
    throw NumericalError("postselection: threshold retains no probability mass");
  }
  const double m_eta =
      math::integrate([&](double e) { return e * model.density(e); }, cut, hi, 1e-9, 1e-13) / mass;
  const double m_t =
      math::integrate([&](double e) { return std::sqrt(e) * model.density(e); }, cut, hi, 1e-9,
                1e-13) /
      mass;
  PostselectionReport r;
  r.eta_min = eta_min;
  r.exceedance = mass;
  r.mean_eta = lf * m_eta;
  r.mean_T_sq_fluct = lf * (m_eta - m_t * m_t);
  r.variance_out = 0.5 + r.mean_eta * input.normal_ordered_variance_in +
                   r.mean_T_sq_fluct * input.mean_quadrature_in * input.mean_quadrature_in;
  r.squeezing_out_db = 10.0 * std::log10(r.variance_out / 0.5);
  return r;
}

// One row of the threshold scan; thresholds above the largest transmittance
// are flagged rather than fatal.
struct ThresholdRow {
  PostselectionReport report;
  bool valid = false;
  std::string note;
};

inline std::vector<ThresholdRow> squeezing_vs_threshold(const std::vector<double>& samples,
                                                        const std::vector<double>& thresholds,
                                                        const SqueezingInput& input) {
  input.validate();
  std::vector<ThresholdRow> rows;
  rows.reserve(thresholds.size());
  for (double t : thresholds) {
    ThresholdRow row;
    row.report.eta_min = t;
    try {
      row.report = squeezing_out(samples, t, input);
      row.valid = true;
    } catch (const std::exception& e) {
      row.note = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<ThresholdRow> squeezing_vs_threshold(const PdtModel& model,
                                                        const std::vector<double>& thresholds,
                                                        const SqueezingInput& input) {
  input.validate();
  std::vector<ThresholdRow> rows;
  rows.reserve(thresholds.size());
  for (double t : thresholds) {
    ThresholdRow row;
    row.report.eta_min = t;
    try {
      row.report = squeezing_out(model, t, input);
      row.valid = true;
    } catch (const std::exception& e) {
      row.note = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace atmq
