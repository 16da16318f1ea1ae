#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "atmq/errors.hpp"

// Special functions and quadrature shared across the library. Accuracy on the
// domains actually used is checked to better than 1e-10 by the unit suite
// against integral-representation and identity oracles.
namespace atmq::math {

inline constexpr double pi = 3.14159265358979323846;

/// Bessel J0. Thin wrapper so every caller goes through one point.
inline double bessel_j0(double x) { return std::cyl_bessel_j(0.0, std::fabs(x)); }

namespace detail {

// Asymptotic tails of exp(-x)*I_nu(x); coefficients from the standard
// large-argument expansion, converged to double precision for x > 500.
inline double i0e_asymptotic(double x) {
  const double ix = 1.0 / x;
  double s = 1.0;
  s += ix * (1.0 / 8.0);
  s += ix * ix * (9.0 / 128.0);
  s += ix * ix * ix * (225.0 / 3072.0);
  s += ix * ix * ix * ix * (11025.0 / 98304.0);
  s += ix * ix * ix * ix * ix * (893025.0 / 3932160.0);
  return s / std::sqrt(2.0 * pi * x);
}

inline double i1e_asymptotic(double x) {
  const double ix = 1.0 / x;
  double s = 1.0;
  s -= ix * (3.0 / 8.0);
  s -= ix * ix * (15.0 / 128.0);
  s -= ix * ix * ix * (105.0 / 1024.0);
  s -= ix * ix * ix * ix * (14175.0 / 98304.0);
  return s / std::sqrt(2.0 * pi * x);
}

}  // namespace detail

/// exp(-x) * I0(x) for x >= 0.
inline double i0e(double x) {
  if (x < 0.0) throw NumericalError("i0e: negative argument");
  if (x < 1e-4) return 1.0 - x + 0.75 * x * x;  // series, rel. error < 1e-12
  if (x <= 500.0) return std::exp(-x) * std::cyl_bessel_i(0.0, x);
  return detail::i0e_asymptotic(x);
}

/// exp(-x) * I1(x) for x >= 0.
inline double i1e(double x) {
  if (x < 0.0) throw NumericalError("i1e: negative argument");
  if (x < 1e-4) return 0.5 * x - 0.5 * x * x + (5.0 / 16.0) * x * x * x;
  if (x <= 500.0) return std::exp(-x) * std::cyl_bessel_i(1.0, x);
  return detail::i1e_asymptotic(x);
}

/// 1 - exp(-x)*I0(x) without cancellation near x = 0.
inline double one_minus_i0e(double x) {
  if (x < 0.0) throw NumericalError("one_minus_i0e: negative argument");
  if (x < 1e-4) return x - 0.75 * x * x + (5.0 / 12.0) * x * x * x;
  return 1.0 - i0e(x);
}

/// Principal Lambert W for x >= 0 (the only branch the models need).
inline double lambert_w0(double x) {
  if (x < 0.0) throw NumericalError("lambert_w0: negative argument");
  if (x == 0.0) return 0.0;
  double w;
  if (x < 1.0) {
    w = x * (1.0 - x);  // from w = x - x^2 + ...
  } else {
    const double lx = std::log(x);
    w = lx > 1.0 ? lx - std::log(lx) : lx;
    if (w <= 0.0) w = 0.5 * x;
  }
  for (int it = 0; it < 64; ++it) {
    const double e = std::exp(w);
    const double f = w * e - x;
    const double dw = f / (e * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
    w -= dw;
    if (std::fabs(dw) <= 1e-14 * (1.0 + std::fabs(w))) return w;
  }
  throw NumericalError("lambert_w0: no convergence");
}

/// W0(exp(y)) for arbitrary y; safe when exp(y) would overflow.
inline double lambert_w0_from_ln(double y) {
  if (y < 690.0) return lambert_w0(std::exp(y));
  double w = y - std::log(y);
  for (int it = 0; it < 64; ++it) {
    const double dw = (w + std::log(w) - y) * w / (w + 1.0);
    w -= dw;
    if (std::fabs(dw) <= 1e-14 * w) return w;
  }
  throw NumericalError("lambert_w0_from_ln: no convergence");
}

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
  constexpr double eps = 1e-15;
  constexpr double fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw NumericalError("reg_inc_beta: continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw NumericalError("reg_inc_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbt = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  const double bt = std::exp(lbt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::betacf(a, b, x) / a;
  return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * pi);
}

/// Standard normal quantile; tail-series start plus Newton polish.
inline double inv_normal_cdf(double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw NumericalError("inv_normal_cdf: p outside (0,1)");
  const bool lower = p < 0.5;
  const double pp = lower ? p : 1.0 - p;
  const double t = std::sqrt(-2.0 * std::log(pp));
  double x = t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t));
  if (lower) x = -x;
  for (int it = 0; it < 4; ++it) {
    const double err = normal_cdf(x) - p;
    x -= err / normal_pdf(x);
  }
  return x;
}

struct GlRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

/// Gauss-Legendre rule of order n, computed once by Newton iteration.
inline const GlRule& gauss_legendre(int n) {
  if (n < 1) throw NumericalError("gauss_legendre: order must be >= 1");
  static std::mutex mu;
  static std::map<int, GlRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  GlRule rule;
  rule.x.assign(n, 0.0);
  rule.w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double t0 = 1.0, t1 = x;
      for (int j = 2; j <= n; ++j) {
        const double t2 = ((2.0 * j - 1.0) * x * t1 - (j - 1.0) * t0) / j;
        t0 = t1;
        t1 = t2;
      }
      dp = n * (x * t1 - t0) / (x * x - 1.0);
      const double dx = t1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    rule.x[i] = -x;
    rule.x[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.w[i] = w;
    rule.w[n - 1 - i] = w;
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

namespace detail {

template <class F>
inline double gl_segment(F& f, double a, double b, const GlRule& rule) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.x.size(); ++i) s += rule.w[i] * f(c + h * rule.x[i]);
  return s * h;
}

}  // namespace detail

/// Adaptive quadrature over [a, b] with an embedded GL12/GL24 error estimate.
/// Converges to max(abs_tol, rel_tol*|I|); throws NumericalError on failure.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10,
                 double abs_tol = 0.0, int max_depth = 50) {
  if (a == b) return 0.0;
  const GlRule& lo = gauss_legendre(12);
  const GlRule& hi = gauss_legendre(24);

  struct Segment {
    double a, b, coarse;
    int depth;
  };
  const double first = detail::gl_segment(f, a, b, hi);
  double scale = std::fabs(first);
  std::vector<Segment> stack{{a, b, first, 0}};
  double total = 0.0;
  std::uint64_t evals = 0;
  while (!stack.empty()) {
    const Segment seg = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (seg.a + seg.b);
    const double left = detail::gl_segment(f, seg.a, mid, hi);
    const double right = detail::gl_segment(f, mid, seg.b, hi);
    const double refined = left + right;
    const double rough = detail::gl_segment(f, seg.a, seg.b, lo);
    evals += 60;
    if (evals > 40'000'000ull)
      throw NumericalError("integrate: evaluation budget exhausted");
    const double err = std::fabs(refined - rough) + std::fabs(refined - seg.coarse);
    const double frac = (seg.b - seg.a) / (b - a);
    const double tol =
        std::max(abs_tol, rel_tol * std::max(scale, std::fabs(total))) *
        std::max(frac, 1e-6);
    if (err <= tol || seg.depth >= max_depth) {
      if (seg.depth >= max_depth && err > 64.0 * tol)
        throw NumericalError("integrate: max refinement depth reached");
      total += refined;
      scale = std::max(scale, std::fabs(total));
    } else {
      stack.push_back({seg.a, mid, left, seg.depth + 1});
      stack.push_back({mid, seg.b, right, seg.depth + 1});
    }
  }
  return total;
}

}  // namespace atmq::math
