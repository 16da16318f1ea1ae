#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "atmq/math.hpp"

using namespace atmq;

TEST_CASE("scaled Bessel functions match quadrature oracles") {
  // I_nu(x) = (1/pi) Int_0^pi e^{x cos t} cos(nu t) dt, evaluated adaptively.
  auto i_nu = [](int nu, double x) {
    return math::integrate(
               [&](double t) { return std::exp(x * std::cos(t)) * std::cos(nu * t); }, 0.0,
               math::pi, 1e-12, 1e-300) /
           math::pi;
  };
  for (double x : {1e-6, 1e-4, 0.01, 0.3, 1.0, 3.0, 17.0, 120.0, 480.0}) {
    CHECK(math::i0e(x) == Catch::Approx(std::exp(-x) * i_nu(0, x)).epsilon(1e-10));
    CHECK(math::i1e(x) == Catch::Approx(std::exp(-x) * i_nu(1, x)).epsilon(1e-10));
  }
  // Asymptotic branch continuity.
  CHECK(math::i0e(500.001) == Catch::Approx(math::i0e(499.999)).epsilon(1e-9));
}

TEST_CASE("one_minus_i0e is accurate where cancellation kills the naive form") {
  // 1 - e^{-x} I0(x) = x - (3/4)x^2 + (5/12)x^3 - ... for small x.
  CHECK(math::one_minus_i0e(1e-8) == Catch::Approx(1e-8).epsilon(1e-6));
  CHECK(math::one_minus_i0e(1e-5) ==
        Catch::Approx(1e-5 - 0.75e-10 + (5.0 / 12.0) * 1e-15).epsilon(1e-10));
  const double x = 0.2;
  CHECK(math::one_minus_i0e(x) == Catch::Approx(1.0 - math::i0e(x)).epsilon(1e-12));
}

TEST_CASE("Lambert W satisfies its defining identity") {
  for (double y : {1e-6, 0.1, 1.0, 2.5, 40.0, 1e4, 1e12}) {
    const double w = math::lambert_w0(y);
    CHECK(w * std::exp(w) == Catch::Approx(y).epsilon(1e-12));
  }
  // Log-argument form: solves w + ln w = ln y, usable when y overflows.
  for (double ln_y : {-5.0, 0.0, 3.0, 200.0, 5000.0}) {
    const double w = math::lambert_w0_from_ln(ln_y);
    CHECK(w + std::log(w) == Catch::Approx(ln_y).margin(1e-10));
  }
  CHECK(math::lambert_w0(1.0) == Catch::Approx(0.5671432904097838).epsilon(1e-14));
}

TEST_CASE("normal CDF and its inverse") {
  CHECK(math::normal_cdf(0.0) == Catch::Approx(0.5).epsilon(1e-15));
  CHECK(math::normal_cdf(1.0) == Catch::Approx(0.8413447460685429).epsilon(1e-12));
  CHECK(math::normal_cdf(-1.0) == Catch::Approx(0.15865525393145705).epsilon(1e-12));
  for (double u : {1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
    CHECK(math::normal_cdf(math::inv_normal_cdf(u)) == Catch::Approx(u).epsilon(1e-9));
  }
}

TEST_CASE("regularized incomplete beta") {
  // I_x(1,1) = x; I_x(2,2) = x^2 (3 - 2x); symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
  for (double x : {0.1, 0.5, 0.9}) {
    CHECK(math::reg_inc_beta(1.0, 1.0, x) == Catch::Approx(x).epsilon(1e-12));
    CHECK(math::reg_inc_beta(2.0, 2.0, x) == Catch::Approx(x * x * (3.0 - 2.0 * x)).epsilon(1e-12));
    CHECK(math::reg_inc_beta(3.7, 1.9, x) ==
          Catch::Approx(1.0 - math::reg_inc_beta(1.9, 3.7, 1.0 - x)).margin(1e-12));
  }
  CHECK(std::exp(math::log_beta(2.0, 3.0)) == Catch::Approx(1.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
  const math::GlRule& r = math::gauss_legendre(12);
  double s0 = 0.0, s2 = 0.0, s22 = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    s0 += r.w[i];
    s2 += r.w[i] * r.x[i] * r.x[i];
    s22 += r.w[i] * std::pow(r.x[i], 22);
  }
  CHECK(s0 == Catch::Approx(2.0).epsilon(1e-14));
  CHECK(s2 == Catch::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(s22 == Catch::Approx(2.0 / 23.0).epsilon(1e-13));  // degree 22 < 2*12
  // Nodes come out sorted ascending; downstream grids rely on it.
  for (std::size_t i = 1; i < r.x.size(); ++i) CHECK(r.x[i] > r.x[i - 1]);
}

TEST_CASE("adaptive quadrature handles smooth and peaked integrands") {
  CHECK(math::integrate([](double x) { return std::sin(x); }, 0.0, math::pi) ==
        Catch::Approx(2.0).epsilon(1e-12));
  // Narrow Gaussian inside a wide interval.
  const double v = math::integrate(
      [](double x) { return std::exp(-0.5 * x * x * 1e6) * 1000.0; }, -10.0, 10.0, 1e-10);
  CHECK(v == Catch::Approx(std::sqrt(2.0 * math::pi)).epsilon(1e-8));
}
