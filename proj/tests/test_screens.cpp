#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <numeric>

#include "atmq/screens.hpp"

using namespace atmq;

namespace {

const TurbulenceParams kTurb{1e-14, 1e-3, 80.0};
const OpticalParams kOpt{808e-9};
constexpr double kSlab = 100.0;

}  // namespace

TEST_CASE("ring weights sum to half the band-limited phase variance") {
  SpectralRings r = build_rings(kTurb, kOpt, kSlab, 256, 1.0 / (15.0 * kTurb.L0),
                                2.0 / kTurb.l0);
  REQUIRE(r.rings() == 256);
  const double sum = std::accumulate(r.s.begin(), r.s.end(), 0.0);
  const double var = phase_variance_band(kTurb, kOpt, kSlab, r.K.front(), r.K.back());
  CHECK(2.0 * sum == Catch::Approx(var).epsilon(1e-8));
  // Geometric boundaries: constant ratio.
  const double q = r.K[1] / r.K[0];
  CHECK(r.K[100] / r.K[99] == Catch::Approx(q).epsilon(1e-12));
}

TEST_CASE("harmonic amplitudes carry twice the ring weight in mean square") {
  SpectralRings r = build_rings(kTurb, kOpt, kSlab, 8, 1e-2, 2e3);
  RngStream rng(42, 7);
  const std::size_t trials = 40000;
  std::vector<double> acc(r.rings(), 0.0);
  for (std::size_t t = 0; t < trials; ++t) {
    SparseScreen s = sample_sparse_screen(r, rng);
    for (std::size_t i = 0; i < r.rings(); ++i) acc[i] += std::norm(s.a[i]);
    // Wave vectors stay inside their ring.
    for (std::size_t i = 0; i < r.rings(); ++i) {
      const double kap = std::hypot(s.kx[i], s.ky[i]);
      REQUIRE(kap >= r.K[i] * (1.0 - 1e-12));
      REQUIRE(kap <= r.K[i + 1] * (1.0 + 1e-12));
    }
  }
  for (std::size_t i = 0; i < r.rings(); ++i) {
    const double mean = acc[i] / static_cast<double>(trials);
    // relative sampling error ~ sqrt(2/trials) ~ 0.7%; allow 4 sigma
    CHECK(mean == Catch::Approx(2.0 * r.s[i]).epsilon(0.03));
  }
}

TEST_CASE("screen ensemble variance matches the band-limited theory") {
  SpectralRings r = build_rings(kTurb, kOpt, kSlab, 512, 1.0 / (15.0 * kTurb.L0),
                                2.0 / kTurb.l0);
  RngStream rng(99, 0);
  const double target = phase_variance_band(kTurb, kOpt, kSlab, r.K.front(), r.K.back());
  const std::size_t trials = 20000;
  double acc = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    SparseScreen s = sample_sparse_screen(r, rng);
    const double v = evaluate_screen_at(s, 0.013, -0.007);
    acc += v * v;
  }
  // phi(r) is a sum of many comparable harmonics; var of phi^2 ~ 2 target^2,
  // so the sample mean has ~1% relative error at 2e4 trials. Allow 5 sigma.
  CHECK(acc / static_cast<double>(trials) == Catch::Approx(target).epsilon(0.05));
}

TEST_CASE("grid evaluation agrees with direct single-point evaluation") {
  SpectralRings r = build_rings(kTurb, kOpt, kSlab, 300, 1e-2, 2e3);
  RngStream rng(5, 1);
  SparseScreen s = sample_sparse_screen(r, rng);
  GridSpec g{128, 1e-3};
  std::vector<double> phi = evaluate_screen(s, g);
  double scale = 0.0;
  for (std::size_t i = 0; i < r.rings(); ++i) scale += std::abs(s.a[i]);
  for (std::size_t iy = 0; iy < g.n; iy += 17) {
    for (std::size_t ix = 0; ix < g.n; ix += 13) {
      const double direct = evaluate_screen_at(s, g.coord(ix), g.coord(iy));
      REQUIRE(std::abs(phi[iy * g.n + ix] - direct) < 1e-12 * scale);
    }
  }
}

TEST_CASE("two-point covariance follows the ring-averaged Bessel sum") {
  // <phi(r) phi(r + dr)> = sum_n s_n <cos(k_n . dr)> where the ring average
  // of cos is Int J0(k dr) over the ring; checked by Monte Carlo at one dr.
  SpectralRings r = build_rings(kTurb, kOpt, kSlab, 64, 1e-1, 1e3);
  const double dx = 4e-3;
  double theory = 0.0;
  for (std::size_t i = 0; i < r.rings(); ++i) {
    const double lo2 = r.K[i] * r.K[i], hi2 = r.K[i + 1] * r.K[i + 1];
    // kappa^2 is uniform on [lo2, hi2]
    const double avg = math::integrate(
                         [&](double u) { return math::bessel_j0(std::sqrt(u) * dx); },
                         lo2, hi2, 1e-10) /
                       (hi2 - lo2);
    theory += r.s[i] * avg;
  }
  RngStream rng(1234, 0);
  const std::size_t trials = 60000;
  double acc = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    SparseScreen s = sample_sparse_screen(r, rng);
    acc += evaluate_screen_at(s, 0.0, 0.0) * evaluate_screen_at(s, dx, 0.0);
  }
  const double mc = acc / static_cast<double>(trials);
  const double var = 2.0 * std::accumulate(r.s.begin(), r.s.end(), 0.0);
  // products have std ~ var; mean error ~ var/sqrt(trials)
  CHECK(std::abs(mc - theory) < 5.0 * var / std::sqrt(static_cast<double>(trials)));
}

TEST_CASE("FFT screen variance matches the spectral Riemann sum") {
  GridSpec g{64, 2e-3};
  const double dk = g.kstep();
  // Ensemble variance at any point: sum over modes of 2 Phi dk^2 * 1/2
  // (Re of complex normal) summed over the full DFT grid.
  double target = 0.0;
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const double kap = std::hypot(g.kfreq(ix), g.kfreq(iy));
      target += phase_psd(kap, kTurb, kOpt, kSlab) * dk * dk;
    }
  RngStream rng(77, 3);
  Fft2d fft(g.n);
  const std::size_t trials = 3000;
  double acc = 0.0;
  const std::size_t probe = (g.n / 2) * g.n + g.n / 3;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> phi = sample_fft_screen(kTurb, kOpt, kSlab, g, rng, &fft);
    acc += phi[probe] * phi[probe];
  }
  CHECK(acc / static_cast<double>(trials) == Catch::Approx(target).epsilon(0.1));
}

TEST_CASE("subharmonic level zero reproduces the plain FFT screen") {
  GridSpec g{64, 2e-3};
  RngStream a(10, 1), b(10, 1);
  std::vector<double> f0 = sample_fft_screen(kTurb, kOpt, kSlab, g, a);
  std::vector<double> s0 = sample_subharmonic_screen(kTurb, kOpt, kSlab, g, 0, b);
  REQUIRE(f0 == s0);
  // Levels add energy.
  RngStream c(10, 1);
  std::vector<double> s2 = sample_subharmonic_screen(kTurb, kOpt, kSlab, g, 2, c);
  double v0 = 0.0, v2 = 0.0;
  for (std::size_t i = 0; i < f0.size(); ++i) {
    v0 += f0[i] * f0[i];
    v2 += s2[i] * s2[i];
  }
  CHECK(v2 > v0);
}

TEST_CASE("empirical structure function validates separations") {
  GridSpec g{64, 1e-3};
  auto gen = [&](std::size_t) { return std::vector<double>(g.n * g.n, 0.0); };
  CHECK_THROWS_AS(empirical_structure_function(1, gen, g, {1.5e-3 * 1.0001}), ConfigError);
  CHECK_THROWS_AS(empirical_structure_function(1, gen, g, {0.0}), ConfigError);
  CHECK_THROWS_AS(empirical_structure_function(0, gen, g, {1e-3}), ConfigError);
  // A linear ramp phi = x has exact increments d^2 along x and 0 along y,
  // so the two-axis average is d^2/2.
  std::vector<double> ramp(g.n * g.n);
  for (std::size_t iy = 0; iy < g.n; ++iy)
    for (std::size_t ix = 0; ix < g.n; ++ix) ramp[iy * g.n + ix] = g.coord(ix);
  auto rgen = [&](std::size_t) { return ramp; };
  std::vector<double> sf = empirical_structure_function(3, rgen, g, {2e-3, 5e-3});
  CHECK(sf[0] == Catch::Approx(0.5 * 4e-6).epsilon(1e-12));
  CHECK(sf[1] == Catch::Approx(0.5 * 25e-6).epsilon(1e-12));
}

TEST_CASE("screen dump writes grid metadata and exact payload") {
  GridSpec g{64, 1e-3};
  std::vector<double> phi(g.n * g.n);
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = std::sin(0.1 * i);
  const std::string path = "screen_dump_test.bin";
  write_screen_dump(path, phi, g, "unit");
  std::FILE* f = std::fopen(path.c_str(), "rb");
  REQUIRE(f);
  std::vector<double> back(phi.size());
  REQUIRE(std::fread(back.data(), sizeof(double), back.size(), f) == back.size());
  std::fclose(f);
  CHECK(back == phi);
  std::remove(path.c_str());
  std::remove((path + ".txt").c_str());
}
