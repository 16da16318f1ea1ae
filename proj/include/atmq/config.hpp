#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "atmq/crc64.hpp"
#include "atmq/errors.hpp"
#include "atmq/field.hpp"
#include "atmq/grid.hpp"
#include "atmq/turbulence.hpp"
#include "atmq/version.hpp"

namespace atmq {

/// Ring-partition parameters for screen synthesis.
struct RingParams {
  std::size_t count = 1024;
  double k_min = 0.0;  ///< (1/m); 0 means "derive as 1/(15 L0)"
  double k_max = 0.0;  ///< (1/m); 0 means "derive as 2/l0"

  double resolved_k_min(const TurbulenceParams& t) const {
    return k_min > 0.0 ? k_min : 1.0 / (15.0 * t.L0);
  }
  double resolved_k_max(const TurbulenceParams& t) const {
    return k_max > 0.0 ? k_max : 2.0 / t.l0;
  }
};

/// Smallest screen count that keeps the per-slab Rytov parameter at or below
/// 0.1; presets override it with their documented values.
inline std::size_t default_screen_count(const TurbulenceParams& t, const OpticalParams& o,
                                        double z_ap) {
  const double total = rytov_parameter(t, o, z_ap);
  if (total <= 0.1) return 1;
  // per-slab value for m slabs is total * m^{-11/6} <= 0.1
  return static_cast<std::size_t>(std::ceil(std::pow(total / 0.1, 6.0 / 11.0)));
}

/// Complete description of one simulated channel run.
struct ChannelConfig {
  std::string label;
  BeamSpec beam;
  TurbulenceParams turbulence{0.0, 1e-3, 80.0};
  OpticalParams optics{809e-9};
  double z_ap = 0.0;  ///< transmitter-to-aperture distance (m)
  GridSpec grid;
  std::size_t n_screens = 1;
  RingParams rings;
  std::vector<double> aperture_radii;  ///< (m)
  std::size_t sample_count = 1;
  std::uint64_t master_seed = 1;
  bool tracked = true;
  bool boundary_mask = false;
  bool desk_scale = false;

  double slab_length() const { return z_ap / static_cast<double>(n_screens); }

  void validate() const {
    beam.validate();
    if (turbulence.cn2 > 0.0) turbulence.validate();
    optics.validate();
    grid.validate();
    if (!(z_ap > 0.0)) throw ConfigError("z_ap must be positive");
    if (turbulence.cn2 > 0.0 && n_screens < 1)
      throw ConfigError("n_screens must be >= 1 when turbulence is on");
    if (rings.count < 1) throw ConfigError("rings.count must be >= 1");
    if (sample_count < 1) throw ConfigError("sample_count must be >= 1");
    if (aperture_radii.empty()) throw ConfigError("aperture_radii must be non-empty");
    for (double r : aperture_radii)
      if (!(r > 0.0) || !(r < grid.half_width()))
        throw ConfigError("aperture radius must be in (0, grid half-width)");
    if (turbulence.cn2 > 0.0) {
      const double kmin = rings.resolved_k_min(turbulence);
      const double kmax = rings.resolved_k_max(turbulence);
      if (!(kmin > 0.0) || !(kmin < kmax))
        throw ConfigError("ring bounds must satisfy 0 < K_min < K_max");
    }
  }
};

namespace detail {

inline nlohmann::json f0_to_json(double f0) {
  if (std::isinf(f0)) return "inf";
  return f0;
}

inline double f0_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw ConfigError("beam.F0_m: expected a number or \"inf\"");
  }
  return j.get<double>();
}

template <typename T>
T require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("config: missing field ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config: bad value for field ") + key);
  }
}

inline const nlohmann::json& section(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("config: missing field ") + key);
  return j.at(key);
}

}  // namespace detail

inline nlohmann::json config_to_json(const ChannelConfig& c) {
  nlohmann::json j;
  j["label"] = c.label;
  j["beam"] = {{"W0_m", c.beam.W0}, {"F0_m", detail::f0_to_json(c.beam.F0)}};
  j["turbulence"] = {{"cn2", c.turbulence.cn2}, {"l0_m", c.turbulence.l0},
                     {"L0_m", c.turbulence.L0}};
  j["optics"] = {{"wavelength_m", c.optics.wavelength}};
  j["z_ap_m"] = c.z_ap;
  j["grid"] = {{"points_per_axis", c.grid.n}, {"step_m", c.grid.step}};
  j["n_screens"] = c.n_screens;
  j["rings"] = {{"count", c.rings.count}, {"k_min_inv_m", c.rings.k_min},
                {"k_max_inv_m", c.rings.k_max}};
  j["aperture_radii_m"] = c.aperture_radii;
  j["sample_count"] = c.sample_count;
  j["master_seed"] = c.master_seed;
  j["tracked"] = c.tracked;
  j["boundary_mask"] = c.boundary_mask;
  j["desk_scale"] = c.desk_scale;
  return j;
}

inline ChannelConfig config_from_json(const nlohmann::json& j) {
  ChannelConfig c;
  c.label = detail::require<std::string>(j, "label");
  const auto& beam = detail::section(j, "beam");
  c.beam.W0 = detail::require<double>(beam, "W0_m");
  c.beam.F0 = detail::f0_from_json(detail::section(beam, "F0_m"));
  const auto& turb = detail::section(j, "turbulence");
  c.turbulence.cn2 = detail::require<double>(turb, "cn2");
  c.turbulence.l0 = detail::require<double>(turb, "l0_m");
  c.turbulence.L0 = detail::require<double>(turb, "L0_m");
  c.optics.wavelength = detail::require<double>(detail::section(j, "optics"), "wavelength_m");
  c.z_ap = detail::require<double>(j, "z_ap_m");
  const auto& grid = detail::section(j, "grid");
  c.grid.n = detail::require<std::size_t>(grid, "points_per_axis");
  c.grid.step = detail::require<double>(grid, "step_m");
  c.n_screens = detail::require<std::size_t>(j, "n_screens");
  const auto& rings = detail::section(j, "rings");
  c.rings.count = detail::require<std::size_t>(rings, "count");
  c.rings.k_min = detail::require<double>(rings, "k_min_inv_m");
  c.rings.k_max = detail::require<double>(rings, "k_max_inv_m");
  c.aperture_radii = detail::require<std::vector<double>>(j, "aperture_radii_m");
  c.sample_count = detail::require<std::size_t>(j, "sample_count");
  c.master_seed = detail::require<std::uint64_t>(j, "master_seed");
  c.tracked = detail::require<bool>(j, "tracked");
  c.boundary_mask = detail::require<bool>(j, "boundary_mask");
  c.desk_scale = detail::require<bool>(j, "desk_scale");
  return c;
}

/// Canonical single-line serialization: sorted keys, no whitespace, shortest
/// round-trip float formatting. parse -> canonical_dump -> parse is a fixed
/// point, and the run hash is defined over this text.
inline std::string canonical_dump(const ChannelConfig& c) { return config_to_json(c).dump(); }

inline ChannelConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

/// 16-hex-digit run identifier, stable under key reordering of the input
/// text because it is computed over the canonical serialization.
inline std::string config_hash(const ChannelConfig& c) {
  const std::string text = canonical_dump(c);
  const std::uint64_t h = crc64(text.data(), text.size());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

/// Named channel presets. Base names: weak, moderate, strong; each accepts a
/// "-collimated" (default) or "-focused" suffix, except strong which is
/// collimated only.
inline ChannelConfig preset_config(const std::string& name) {
  ChannelConfig c;
  c.rings.count = 1024;
  c.sample_count = 100000;
  c.master_seed = 1000003ULL;
  c.tracked = true;

  std::string base = name;
  bool focused = false;
  if (base.size() > 11 && base.substr(base.size() - 11) == "-collimated") {
    base = base.substr(0, base.size() - 11);
  } else if (base.size() > 8 && base.substr(base.size() - 8) == "-focused") {
    base = base.substr(0, base.size() - 8);
    focused = true;
  }

  if (base == "weak") {
    c.turbulence = {5e-15, 1e-3, 80.0};
    c.optics = {809e-9};
    c.z_ap = 1000.0;
    c.beam.W0 = 0.02;
    c.grid = {512, 0.3e-3};
    c.n_screens = 10;
    c.boundary_mask = false;
    c.aperture_radii = {0.01, 0.02, 0.03};
  } else if (base == "moderate") {
    c.turbulence = {1.5e-14, 1e-3, 80.0};
    c.optics = {809e-9};
    c.z_ap = 1600.0;
    c.beam.W0 = 0.02;
    c.grid = {512, 0.4e-3};
    c.n_screens = 10;
    c.boundary_mask = false;
    c.aperture_radii = {0.01, 0.02, 0.03};
  } else if (base == "strong") {
    if (focused) throw ConfigError("preset strong has no focused variant");
    c.turbulence = {6e-16, 1e-3, 80.0};
    c.optics = {808e-9};
    c.z_ap = 50000.0;
    c.beam.W0 = 0.06;
    c.grid = {4096, 1e-3};
    c.n_screens = 30;
    c.boundary_mask = true;
    c.aperture_radii = {0.05, 0.10, 0.15};
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  c.beam.F0 = focused ? c.z_ap : std::numeric_limits<double>::infinity();
  c.label = base + (focused ? "-focused" : "-collimated");
  return c;
}

/// CI-sized variant of a config: half the grid resolution at the same
/// physical extent, sample count capped at 5000, output labeled as reduced.
inline ChannelConfig apply_desk_scale(ChannelConfig c) {
  if (c.desk_scale) return c;
  c.grid.n /= 2;
  c.grid.step *= 2.0;
  c.sample_count = std::min<std::size_t>(c.sample_count, 5000);
  c.desk_scale = true;
  c.label += "-desk";
  return c;
}

/// Provenance record written next to every primary output.
struct RunManifest {
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::string code_version;
  std::string created;  ///< ISO-8601 UTC; excluded from determinism checks
  std::vector<std::string> outputs;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["master_seed"] = master_seed;
    j["code_version"] = code_version;
    j["created"] = created;
    j["outputs"] = outputs;
    return j;
  }
};

}  // namespace atmq
