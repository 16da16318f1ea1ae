#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "atmq/sampling.hpp"

using namespace atmq;

namespace {

ChannelConfig small_turbulent_config() {
  ChannelConfig c;
  c.label = "unit-small";
  c.beam.W0 = 3e-3;
  c.turbulence = {1e-14, 1e-3, 80.0};
  c.optics.wavelength = 809e-9;
  c.z_ap = 100.0;
  c.grid = {64, 0.5e-3};
  c.n_screens = 2;
  c.rings.count = 32;
  c.aperture_radii = {2e-3, 4e-3};
  c.sample_count = 8;
  c.master_seed = 424243;
  return c;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("simulation output is identical for any thread count") {
  ChannelConfig c = small_turbulent_config();
  SampleSet s1 = run_simulation(c, 1);
  SampleSet s3 = run_simulation(c, 3);
  REQUIRE(s1.records.size() == s3.records.size());
  for (std::size_t i = 0; i < s1.records.size(); ++i) {
    CHECK(s1.records[i].index == s3.records[i].index);
    CHECK(s1.records[i].eta == s3.records[i].eta);
    CHECK(s1.records[i].eta_tracked == s3.records[i].eta_tracked);
    CHECK(s1.records[i].x0 == s3.records[i].x0);
    CHECK(s1.records[i].Sxy == s3.records[i].Sxy);
    CHECK(s1.records[i].W1sq == s3.records[i].W1sq);
  }
  CHECK(s1.mean_intensity == s3.mean_intensity);
  CHECK(s1.mean_intensity_centered == s3.mean_intensity_centered);

  save_samples(s1, "samples_t1.bin");
  save_samples(s3, "samples_t3.bin");
  CHECK(file_bytes("samples_t1.bin") == file_bytes("samples_t3.bin"));
  std::remove("samples_t1.bin");
  std::remove("samples_t3.bin");
}

TEST_CASE("sample files round-trip losslessly") {
  ChannelConfig c = small_turbulent_config();
  c.sample_count = 5;
  SampleSet s = run_simulation(c, 2);
  const std::string path = "samples_rt.bin";
  save_samples(s, path);
  SampleSet back = load_samples(path);
  CHECK(canonical_dump(back.config) == canonical_dump(s.config));
  REQUIRE(back.records.size() == s.records.size());
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    CHECK(back.records[i].index == s.records[i].index);
    CHECK(back.records[i].eta == s.records[i].eta);
    CHECK(back.records[i].eta_tracked == s.records[i].eta_tracked);
    CHECK(back.records[i].x0 == s.records[i].x0);
    CHECK(back.records[i].y0 == s.records[i].y0);
    CHECK(back.records[i].Sxx == s.records[i].Sxx);
    CHECK(back.records[i].Sxy == s.records[i].Sxy);
    CHECK(back.records[i].Syy == s.records[i].Syy);
    CHECK(back.records[i].W1sq == s.records[i].W1sq);
    CHECK(back.records[i].W2sq == s.records[i].W2sq);
  }
  CHECK(back.mean_intensity == s.mean_intensity);
  CHECK(back.mean_intensity_centered == s.mean_intensity_centered);
  std::remove(path.c_str());
}

TEST_CASE("sample file loader rejects damaged input") {
  ChannelConfig c = small_turbulent_config();
  c.sample_count = 2;
  SampleSet s = run_simulation(c, 1);
  const std::string path = "samples_bad.bin";
  save_samples(s, path);
  const std::string good = file_bytes(path);

  auto write_bytes = [&](const std::string& b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  };

  // Truncation.
  write_bytes(good.substr(0, good.size() / 2));
  CHECK_THROWS_AS(load_samples(path), IoError);
  // Bad magic.
  std::string bad = good;
  bad[0] = 'X';
  write_bytes(bad);
  CHECK_THROWS_WITH(load_samples(path), Catch::Matchers::ContainsSubstring("magic"));
  // Unsupported version (before the checksum so the message is specific).
  bad = good;
  bad[4] = static_cast<char>(99);
  write_bytes(bad);
  CHECK_THROWS_WITH(load_samples(path), Catch::Matchers::ContainsSubstring("version"));
  // Payload corruption fails the checksum.
  bad = good;
  bad[good.size() / 2] ^= 0x40;
  write_bytes(bad);
  CHECK_THROWS_WITH(load_samples(path), Catch::Matchers::ContainsSubstring("checksum"));
  std::remove(path.c_str());
}

TEST_CASE("csv export names every column") {
  ChannelConfig c = small_turbulent_config();
  c.sample_count = 2;
  SampleSet s = run_simulation(c, 1);
  const std::string path = "samples.csv";
  export_csv(s, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,eta_R0,eta_R1,x0,y0,Sxx,Sxy,Syy,etaT_R0,etaT_R1,W1sq,W2sq");
  std::string row;
  std::getline(in, row);
  CHECK(row.substr(0, 2) == "0,");
  std::remove(path.c_str());
}

TEST_CASE("width estimators recover the vacuum beam") {
  ChannelConfig c;
  c.label = "unit-vac";
  c.beam.W0 = 2e-3;
  c.turbulence.cn2 = 0.0;
  c.optics.wavelength = 809e-9;
  c.z_ap = 30.0;
  c.grid = {256, 0.3e-3};
  c.n_screens = 0;
  c.aperture_radii = {2e-3, 4e-3};
  c.sample_count = 3;
  c.master_seed = 7;
  SampleSet s = run_simulation(c, 1);
  const double zr = 0.5 * c.optics.wavenumber() * c.beam.W0 * c.beam.W0;
  const double w = c.beam.W0 * std::sqrt(1.0 + (c.z_ap / zr) * (c.z_ap / zr));
  CHECK(long_term_width(s) == Catch::Approx(w).epsilon(1e-3));
  CHECK(wandering_variance(s) == Catch::Approx(0.0).margin(1e-18));
  CHECK(short_term_width(s) == Catch::Approx(long_term_width(s)).epsilon(1e-12));
  // Without beam motion the axis-fixed and tracked transmittances agree and
  // follow the flat-top law.
  for (std::size_t a = 0; a < 2; ++a) {
    const double R = c.aperture_radii[a];
    const double law = 1.0 - std::exp(-2.0 * R * R / (w * w));
    CHECK(mean_transmittance(s, a) == Catch::Approx(law).margin(1e-3));
    CHECK(mean_transmittance(s, a, true) == Catch::Approx(mean_transmittance(s, a)).epsilon(1e-9));
  }
  CHECK(mean_eta_from_intensity(s, c.aperture_radii[0]) ==
        Catch::Approx(mean_transmittance(s, 0)).epsilon(1e-12));
  CHECK_THROWS_AS(mean_transmittance(s, 5), ConfigError);
}

TEST_CASE("disabling tracking zeroes the tracked channels") {
  ChannelConfig c = small_turbulent_config();
  c.sample_count = 2;
  c.tracked = false;
  SampleSet s = run_simulation(c, 1);
  for (const SampleRecord& r : s.records) {
    for (double v : r.eta_tracked) CHECK(v == 0.0);
    for (double v : r.eta) CHECK(v > 0.0);
  }
}
