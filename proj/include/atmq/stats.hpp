#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "atmq/errors.hpp"
#include "atmq/math.hpp"
#include "atmq/pdt.hpp"
#include "atmq/sampling.hpp"

namespace atmq {

enum class KsKind { empirical_vs_model, empirical_vs_empirical };

struct KsResult {
  double d = 0.0;  // sup distance, in [0, 1]
  std::size_t n_samples = 0;
  KsKind kind = KsKind::empirical_vs_model;
};

// One-sample Kolmogorov-Smirnov distance: exact sup over the sorted sample,
// d = max_i max(|i/M - F(eta_i)|, |(i-1)/M - F(eta_i)|).
inline KsResult ks_statistic(const std::vector<double>& samples, const PdtModel& model) {
  if (samples.empty()) throw ConfigError("ks_statistic: empty sample list");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = model.cdf(sorted[i]);
    const double hi = static_cast<double>(i + 1) / m - f;
    const double lo = f - static_cast<double>(i) / m;
    d = std::max({d, hi, lo});
  }
  return {std::min(d, 1.0), sorted.size(), KsKind::empirical_vs_model};
}

// Two-sample KS distance: sup over the merged jump points of the two
// empirical CDFs. n_samples reports the smaller sample count.
inline KsResult ks_statistic(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw ConfigError("ks_statistic: empty sample list");
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= v) ++i;
    while (j < sb.size() && sb[j] <= v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {std::min(d, 1.0), std::min(sa.size(), sb.size()), KsKind::empirical_vs_empirical};
}

// Pearson correlation with sample-mean centering.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ConfigError("pearson: length mismatch");
  if (xs.size() < 2) throw ConfigError("pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw NumericalError("pearson: zero variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Sample mean/variance plus the g1/g2 shape estimators built from
// bias-uncorrected central moments (variance here is m2 as well).
struct MomentSummary {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

inline MomentSummary moment_summary(const std::vector<double>& xs) {
  if (xs.size() < 4) throw ConfigError("moment_summary: need at least four points");
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : xs) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw NumericalError("moment_summary: zero variance input");
  MomentSummary s;
  s.mean = mean;
  s.variance = m2;
  s.skewness = m3 / std::pow(m2, 1.5);
  s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  return s;
}

// 45-degree rotation of the ln-width pair: Theta_c = (T1+T2)/sqrt(2),
// Theta_s = (T1-T2)/sqrt(2). Orthogonal, so per-entry norms are preserved.
inline std::pair<std::vector<double>, std::vector<double>> theta_rotation(
    const std::vector<double>& t1, const std::vector<double>& t2) {
  if (t1.size() != t2.size()) throw ConfigError("theta_rotation: length mismatch");
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  std::vector<double> tc(t1.size()), ts(t1.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    tc[i] = (t1[i] + t2[i]) * inv_rt2;
    ts[i] = (t1[i] - t2[i]) * inv_rt2;
  }
  return {std::move(tc), std::move(ts)};
}

// Level-4 contour of the sample covariance: points with
// (v - mu)^T Sigma^{-1} (v - mu) = 4, an ellipse with semi-axes 2 sqrt(l_i)
// along the covariance eigenvectors.
struct CovarianceEllipse {
  double center1 = 0.0;
  double center2 = 0.0;
  double inv11 = 0.0;
  double inv12 = 0.0;
  double inv22 = 0.0;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle = 0.0;  // orientation of the major axis, radians
};

inline CovarianceEllipse covariance_ellipse(const std::vector<double>& t1,
                                            const std::vector<double>& t2) {
  if (t1.size() != t2.size()) throw ConfigError("covariance_ellipse: length mismatch");
  if (t1.size() < 2) throw ConfigError("covariance_ellipse: need at least two points");
  const double n = static_cast<double>(t1.size());
  CovarianceEllipse e;
  for (std::size_t i = 0; i < t1.size(); ++i) {
    e.center1 += t1[i];
    e.center2 += t2[i];
  }
  e.center1 /= n;
  e.center2 /= n;
  double c11 = 0.0, c12 = 0.0, c22 = 0.0;
  for (std::size_t i = 0; i < t1.size(); ++i) {
    const double d1 = t1[i] - e.center1;
    const double d2 = t2[i] - e.center2;
    c11 += d1 * d1;
    c12 += d1 * d2;
    c22 += d2 * d2;
  }
  c11 /= n - 1.0;
  c12 /= n - 1.0;
  c22 /= n - 1.0;
  const double det = c11 * c22 - c12 * c12;
  if (!(det > 0.0)) throw NumericalError("covariance_ellipse: singular covariance");
  e.inv11 = c22 / det;
  e.inv12 = -c12 / det;
  e.inv22 = c11 / det;
  const double tr = 0.5 * (c11 + c22);
  const double root = std::sqrt(0.25 * (c11 - c22) * (c11 - c22) + c12 * c12);
  e.semi_major = 2.0 * std::sqrt(tr + root);
  e.semi_minor = 2.0 * std::sqrt(std::max(tr - root, 0.0));
  e.angle = 0.5 * std::atan2(2.0 * c12, c11 - c22);
  return e;
}

// Tangential spot width: the beam-spot width along the rotated axis
// x_r = x cos(chi) + y sin(chi), with tan(chi) = x0/y0 (the deflection angle
// is measured from the y axis in this construction). Undefined at r0 = 0.
inline std::pair<double, double> tangential_width(const SampleRecord& rec) {
  const double r0 = std::sqrt(rec.x0 * rec.x0 + rec.y0 * rec.y0);
  if (!(r0 > 0.0)) {
    throw NumericalError("tangential_width: centroid at the origin has no defined direction");
  }
  const double chi = std::atan2(rec.x0, rec.y0);
  const double c = std::cos(chi);
  const double s = std::sin(chi);
  const double sxr = rec.Sxx * c * c + 2.0 * rec.Sxy * s * c + rec.Syy * s * s;
  if (!(sxr > 0.0)) throw NumericalError("tangential_width: non-positive rotated variance");
  return {std::sqrt(sxr), r0};
}

}  // namespace atmq
