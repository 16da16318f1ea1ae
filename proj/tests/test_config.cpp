#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "atmq/config.hpp"

using namespace atmq;

TEST_CASE("canonical serialization is a round-trip fixed point") {
  ChannelConfig c = preset_config("moderate-focused");
  const std::string once = canonical_dump(c);
  ChannelConfig back = config_from_json(nlohmann::json::parse(once));
  CHECK(canonical_dump(back) == once);
  CHECK(back.beam.F0 == c.beam.F0);
  CHECK(back.master_seed == c.master_seed);
}

TEST_CASE("config hash ignores key order") {
  ChannelConfig c = preset_config("weak-collimated");
  nlohmann::json j = config_to_json(c);
  // Rebuild the object inserting keys in reverse order.
  nlohmann::json shuffled;
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  for (auto it = keys.rbegin(); it != keys.rend(); ++it) shuffled[*it] = j.at(*it);
  CHECK(config_hash(config_from_json(shuffled)) == config_hash(c));
  // And changing any field changes the hash.
  ChannelConfig d = c;
  d.sample_count += 1;
  CHECK(config_hash(d) != config_hash(c));
}

TEST_CASE("collimated F0 serializes as inf and survives the trip") {
  ChannelConfig c = preset_config("strong-collimated");
  CHECK(std::isinf(c.beam.F0));
  const std::string text = canonical_dump(c);
  CHECK(text.find("\"inf\"") != std::string::npos);
  ChannelConfig back = config_from_json(nlohmann::json::parse(text));
  CHECK(std::isinf(back.beam.F0));
}

TEST_CASE("presets carry the published channel parameters") {
  ChannelConfig w = preset_config("weak-collimated");
  CHECK(w.turbulence.cn2 == Catch::Approx(5e-15));
  CHECK(w.z_ap == Catch::Approx(1000.0));
  CHECK(w.beam.W0 == Catch::Approx(0.02));
  CHECK(w.optics.wavelength == Catch::Approx(809e-9));
  CHECK(w.grid.n == 512);
  CHECK(w.grid.step == Catch::Approx(0.3e-3));
  CHECK(w.n_screens == 10);
  CHECK(std::isinf(w.beam.F0));

  ChannelConfig wf = preset_config("weak-focused");
  CHECK(wf.beam.F0 == Catch::Approx(wf.z_ap));

  ChannelConfig m = preset_config("moderate-collimated");
  CHECK(m.turbulence.cn2 == Catch::Approx(1.5e-14));
  CHECK(m.z_ap == Catch::Approx(1600.0));

  ChannelConfig s = preset_config("strong-collimated");
  CHECK(s.turbulence.cn2 == Catch::Approx(6e-16));
  CHECK(s.z_ap == Catch::Approx(50000.0));
  CHECK(s.beam.W0 == Catch::Approx(0.06));
  CHECK(s.optics.wavelength == Catch::Approx(808e-9));
  CHECK(s.grid.n == 4096);
  CHECK(s.n_screens == 30);
  CHECK(s.boundary_mask);

  CHECK_THROWS_AS(preset_config("strong-focused"), ConfigError);
  CHECK_THROWS_AS(preset_config("nope"), ConfigError);
}

TEST_CASE("desk scale halves the grid and caps the sample count") {
  ChannelConfig c = preset_config("weak-collimated");
  const double extent = c.grid.width();
  const std::size_t n = c.grid.n;
  ChannelConfig d = apply_desk_scale(c);
  CHECK(d.grid.n == n / 2);
  CHECK(d.grid.width() == Catch::Approx(extent));
  CHECK(d.sample_count <= 5000);
  CHECK(d.desk_scale);
  CHECK(d.label.find("desk") != std::string::npos);
  CHECK_NOTHROW(d.validate());
  // Applying it twice is idempotent.
  ChannelConfig dd = apply_desk_scale(d);
  CHECK(dd.grid.n == d.grid.n);
  CHECK(dd.label == d.label);
}

TEST_CASE("validation names the offending field") {
  ChannelConfig c = preset_config("weak-collimated");
  c.z_ap = -1.0;
  CHECK_THROWS_WITH(c.validate(), Catch::Matchers::ContainsSubstring("z_ap"));
  c = preset_config("weak-collimated");
  c.aperture_radii = {1.0};  // beyond the grid half-width
  CHECK_THROWS_WITH(c.validate(), Catch::Matchers::ContainsSubstring("aperture"));
  c = preset_config("weak-collimated");
  c.grid.n = 100;  // not a power of two
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("default screen count follows the per-slab Rytov budget") {
  // Smallest m with sigma_R^2(total) * m^{-11/6} <= 0.1, floored at 1.
  ChannelConfig w = preset_config("weak-collimated");
  const double total = rytov_parameter(w.turbulence, w.optics, w.z_ap);
  const std::size_t m = default_screen_count(w.turbulence, w.optics, w.z_ap);
  CHECK(total * std::pow(static_cast<double>(m), -11.0 / 6.0) <= 0.1);
  if (m > 1)
    CHECK(total * std::pow(static_cast<double>(m - 1), -11.0 / 6.0) > 0.1);
  // A nearly quiet channel needs only one screen.
  TurbulenceParams quiet{1e-19, 1e-3, 80.0};
  CHECK(default_screen_count(quiet, w.optics, w.z_ap) == 1);
}
