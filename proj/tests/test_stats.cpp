#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "atmq/stats.hpp"

using namespace atmq;

TEST_CASE("one-sample KS distance is exact on constructed samples") {
  BetaPdt uniform(1.0, 1.0);
  // Midpoint quantiles: the empirical CDF brackets F(x_i) by +-1/(2n).
  const std::size_t n = 100;
  std::vector<double> mid(n);
  for (std::size_t i = 0; i < n; ++i) mid[i] = (static_cast<double>(i) + 0.5) / n;
  KsResult r = ks_statistic(mid, uniform);
  CHECK(r.d == Catch::Approx(0.5 / n).epsilon(1e-12));
  CHECK(r.n_samples == n);
  CHECK(r.kind == KsKind::empirical_vs_model);
  // A point mass in the middle sits half a CDF away.
  std::vector<double> point(50, 0.5);
  CHECK(ks_statistic(point, uniform).d == Catch::Approx(0.5));
  // A point mass at the top edge is maximally distant.
  std::vector<double> top(50, 1.0);
  CHECK(ks_statistic(top, uniform).d == Catch::Approx(1.0));
  CHECK_THROWS_AS(ks_statistic(std::vector<double>{}, uniform), ConfigError);
}

TEST_CASE("bisection sampler passes a KS self-test") {
  // BetaPdt has no closed sampler, so this exercises the generic
  // inverse-CDF-by-bisection path end to end.
  BetaPdt b(3.2, 1.7);
  RngStream rng(404, 0);
  std::vector<double> draws(5000);
  for (double& d : draws) d = b.sample(rng);
  CHECK(ks_statistic(draws, b).d < 0.03);
}

TEST_CASE("two-sample KS distance handles hand cases") {
  CHECK(ks_statistic({0.1, 0.3}, {0.2, 0.4}).d == Catch::Approx(0.5));
  CHECK(ks_statistic({0.1, 0.2}, {0.3, 0.4}).d == Catch::Approx(1.0));
  std::vector<double> same{0.2, 0.5, 0.7, 0.9};
  CHECK(ks_statistic(same, same).d == 0.0);
  KsResult r = ks_statistic(std::vector<double>{0.1, 0.2, 0.3}, std::vector<double>{0.5});
  CHECK(r.n_samples == 1);
  CHECK(r.kind == KsKind::empirical_vs_empirical);
  // Ties across the two samples are resolved by advancing both walkers.
  CHECK(ks_statistic({0.5, 0.5}, {0.5, 0.5}).d == 0.0);
  // Two halves of one stream agree statistically.
  TruncatedLognormal ln = lognormal_from_moments({0.5, 0.3});
  RngStream rng(7, 7);
  std::vector<double> a(20000), b(20000);
  for (double& v : a) v = ln.sample(rng);
  for (double& v : b) v = ln.sample(rng);
  CHECK(ks_statistic(a, b).d < 0.02);
}

TEST_CASE("pearson correlation: exact, null, and error cases") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> y{2.0, 4.0, 6.0, 8.0, 10.0};
  CHECK(pearson(x, y) == Catch::Approx(1.0));
  std::vector<double> yn{10.0, 8.0, 6.0, 4.0, 2.0};
  CHECK(pearson(x, yn) == Catch::Approx(-1.0));
  RngStream rng(9, 9);
  std::vector<double> u(10000), v(10000);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto g = rng.normal_pair();
    u[i] = g[0];
    v[i] = g[1];
  }
  CHECK(std::fabs(pearson(u, v)) < 0.03);
  std::vector<double> konst(5, 1.0);
  CHECK_THROWS_AS(pearson(x, konst), NumericalError);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1.0}), ConfigError);
  CHECK_THROWS_AS(pearson({1.0}, {2.0}), ConfigError);
}

TEST_CASE("moment summary: exact two-point case and gaussian bands") {
  MomentSummary s = moment_summary({-1.0, -1.0, 1.0, 1.0});
  CHECK(s.mean == 0.0);
  CHECK(s.variance == Catch::Approx(1.0));
  CHECK(s.skewness == Catch::Approx(0.0).margin(1e-15));
  CHECK(s.excess_kurtosis == Catch::Approx(-2.0));

  RngStream rng(31, 1);
  std::vector<double> g(100000);
  for (std::size_t i = 0; i < g.size(); i += 2) {
    const auto p = rng.normal_pair();
    g[i] = p[0];
    g[i + 1] = p[1];
  }
  MomentSummary n = moment_summary(g);
  CHECK(n.mean == Catch::Approx(0.0).margin(0.02));
  CHECK(n.variance == Catch::Approx(1.0).epsilon(0.02));
  CHECK(std::fabs(n.skewness) < 0.04);        // ~5 sigma of sqrt(6/n)
  CHECK(std::fabs(n.excess_kurtosis) < 0.08); // ~5 sigma of sqrt(24/n)

  CHECK_THROWS_AS(moment_summary({1.0, 1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(moment_summary({1.0, 1.0, 1.0, 1.0}), NumericalError);
}

TEST_CASE("45-degree width rotation preserves norms and splits covariance") {
  std::vector<double> t1{0.3, -0.1, 0.8, 0.2, -0.5};
  std::vector<double> t2{0.1, 0.4, -0.2, 0.0, 0.6};
  auto [tc, ts] = theta_rotation(t1, t2);
  REQUIRE(tc.size() == t1.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    CHECK(tc[i] * tc[i] + ts[i] * ts[i] ==
          Catch::Approx(t1[i] * t1[i] + t2[i] * t2[i]).epsilon(1e-12));
    // The rotation is the inverse of itself.
    CHECK((tc[i] + ts[i]) / std::sqrt(2.0) == Catch::Approx(t1[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(theta_rotation(t1, std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("covariance ellipse: hand case, inverse identity, coverage") {
  std::vector<double> t1{0.0, 2.0, 0.0, 2.0};
  std::vector<double> t2{0.0, 0.0, 3.0, 3.0};
  CovarianceEllipse e = covariance_ellipse(t1, t2);
  CHECK(e.center1 == Catch::Approx(1.0));
  CHECK(e.center2 == Catch::Approx(1.5));
  // Unbiased covariances: diag(4/3, 3), so the inverse is diag(3/4, 1/3).
  CHECK(e.inv11 == Catch::Approx(0.75));
  CHECK(e.inv12 == Catch::Approx(0.0).margin(1e-15));
  CHECK(e.inv22 == Catch::Approx(1.0 / 3.0));
  CHECK(e.semi_major == Catch::Approx(2.0 * std::sqrt(3.0)));
  CHECK(e.semi_minor == Catch::Approx(2.0 * std::sqrt(4.0 / 3.0)));
  // Major axis along the larger-variance coordinate (t2).
  CHECK(std::fabs(std::fabs(e.angle) - 0.5 * math::pi) < 1e-12);

  std::vector<double> same = t1;
  CHECK_THROWS_AS(covariance_ellipse(t1, same), NumericalError);

  // The level-4 contour of a bivariate normal holds ~86.5% of the mass.
  RngStream rng(77, 1);
  std::vector<double> a(20000), b(20000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto g = rng.normal_pair();
    a[i] = 0.4 * g[0];
    b[i] = 0.4 * (0.6 * g[0] + 0.8 * g[1]);
  }
  CovarianceEllipse n = covariance_ellipse(a, b);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d1 = a[i] - n.center1;
    const double d2 = b[i] - n.center2;
    const double q = n.inv11 * d1 * d1 + 2.0 * n.inv12 * d1 * d2 + n.inv22 * d2 * d2;
    if (q <= 4.0) ++inside;
  }
  const double frac = static_cast<double>(inside) / static_cast<double>(a.size());
  CHECK(frac == Catch::Approx(1.0 - std::exp(-2.0)).margin(0.01));
}

TEST_CASE("tangential width picks the axis perpendicular to the deflection") {
  SampleRecord rec;
  rec.Sxx = 4.0e-6;
  rec.Sxy = 0.0;
  rec.Syy = 9.0e-6;
  rec.x0 = 1e-3;
  rec.y0 = 0.0;
  auto [w_along_x_defl, r0a] = tangential_width(rec);
  CHECK(w_along_x_defl == Catch::Approx(3.0e-3));  // sqrt(Syy)
  CHECK(r0a == Catch::Approx(1e-3));
  rec.x0 = 0.0;
  rec.y0 = 2e-3;
  auto [w_along_y_defl, r0b] = tangential_width(rec);
  CHECK(w_along_y_defl == Catch::Approx(2.0e-3));  // sqrt(Sxx)
  CHECK(r0b == Catch::Approx(2e-3));

  // Diagonal deflection: chi = pi/4, so W_r^2 = (Sxx + Syy)/2 + Sxy.
  SampleRecord diag;
  diag.Sxx = 4.0e-6;
  diag.Sxy = 1.0e-6;
  diag.Syy = 9.0e-6;
  diag.x0 = 1e-3;
  diag.y0 = 1e-3;
  auto [wd, r0d] = tangential_width(diag);
  CHECK(wd * wd == Catch::Approx(7.5e-6).epsilon(1e-12));
  CHECK(r0d == Catch::Approx(std::sqrt(2.0) * 1e-3).epsilon(1e-12));
  // The construction is symmetric under swapping the two axes.
  SampleRecord swapped;
  swapped.Sxx = diag.Syy;
  swapped.Sxy = diag.Sxy;
  swapped.Syy = diag.Sxx;
  swapped.x0 = diag.y0;
  swapped.y0 = diag.x0;
  auto [ws, r0s] = tangential_width(swapped);
  CHECK(ws == Catch::Approx(wd).epsilon(1e-12));
  CHECK(r0s == Catch::Approx(r0d).epsilon(1e-12));

  SampleRecord origin;
  origin.Sxx = 1e-6;
  origin.Syy = 1e-6;
  CHECK_THROWS_AS(tangential_width(origin), NumericalError);
}
