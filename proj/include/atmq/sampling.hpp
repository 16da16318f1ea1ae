#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "atmq/aperture.hpp"
#include "atmq/config.hpp"
#include "atmq/crc64.hpp"
#include "atmq/errors.hpp"
#include "atmq/propagate.hpp"
#include "atmq/rng.hpp"
#include "atmq/thread_pool.hpp"

namespace atmq {

// Per-realization observables. eta[k] is the transmittance of aperture k
// centered on the beam axis; eta_tracked[k] centers the same aperture on the
// sampled centroid (perfect tracking). The spot matrix is taken about the
// centroid; W1sq/W2sq follow the Sxy sign rule of semiaxes().
struct SampleRecord {
  std::uint64_t index = 0;
  std::vector<double> eta;
  double x0 = 0.0;
  double y0 = 0.0;
  double Sxx = 0.0;
  double Sxy = 0.0;
  double Syy = 0.0;
  std::vector<double> eta_tracked;
  double W1sq = 0.0;
  double W2sq = 0.0;
};

struct SampleSet {
  ChannelConfig config;
  std::vector<SampleRecord> records;
  // Mean intensity over samples (row-major, y outer), and the same average
  // taken after shifting each realization so its centroid sits at the origin.
  std::vector<double> mean_intensity;
  std::vector<double> mean_intensity_centered;
};

namespace detail {

// w(r) = v(r + (sx, sy)) by bilinear interpolation; zero outside the grid.
inline std::vector<double> shift_intensity(const std::vector<double>& v, const GridSpec& g,
                                           double sx, double sy) {
  std::vector<double> out(v.size(), 0.0);
  const double half_n = 0.5 * static_cast<double>(g.n);
  const double fx0 = sx / g.step + half_n;
  const double fy0 = sy / g.step + half_n;
  for (std::size_t iy = 0; iy < g.n; ++iy) {
    const double gy = static_cast<double>(iy) + (fy0 - half_n);
    const double jy = std::floor(gy);
    if (jy < 0.0 || jy + 1.0 > static_cast<double>(g.n - 1)) continue;
    const std::size_t y0i = static_cast<std::size_t>(jy);
    const double ty = gy - jy;
    const double* r0 = v.data() + y0i * g.n;
    const double* r1 = r0 + g.n;
    double* dst = out.data() + iy * g.n;
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      const double gx = static_cast<double>(ix) + (fx0 - half_n);
      const double jx = std::floor(gx);
      if (jx < 0.0 || jx + 1.0 > static_cast<double>(g.n - 1)) continue;
      const std::size_t x0i = static_cast<std::size_t>(jx);
      const double tx = gx - jx;
      const double a = r0[x0i] + tx * (r0[x0i + 1] - r0[x0i]);
      const double b = r1[x0i] + tx * (r1[x0i + 1] - r1[x0i]);
      dst[ix] = a + ty * (b - a);
    }
  }
  return out;
}

struct SampleChunk {
  std::vector<SampleRecord> records;
  std::vector<double> sum_intensity;
  std::vector<double> sum_centered;
};

inline SampleRecord extract_record(const std::vector<double>& intensity,
                                   const ChannelConfig& cfg, std::size_t index,
                                   SampleChunk& chunk) {
  const GridSpec& g = cfg.grid;
  SampleRecord rec;
  rec.index = index;
  rec.eta.reserve(cfg.aperture_radii.size());
  for (double r : cfg.aperture_radii) {
    rec.eta.push_back(std::clamp(disc_integral(intensity, g, r, 0.0, 0.0), 0.0, 1.0));
  }
  const Centroid c = centroid(intensity, g);
  rec.x0 = c.x;
  rec.y0 = c.y;
  const SpotMatrix s = spot_matrix(intensity, g, c.x, c.y);
  rec.Sxx = s.xx;
  rec.Sxy = s.xy;
  rec.Syy = s.yy;
  const Semiaxes ax = semiaxes(s);
  rec.W1sq = ax.W1sq;
  rec.W2sq = ax.W2sq;
  rec.eta_tracked.reserve(cfg.aperture_radii.size());
  for (double r : cfg.aperture_radii) {
    const double v = cfg.tracked ? disc_integral(intensity, g, r, c.x, c.y) : 0.0;
    rec.eta_tracked.push_back(std::clamp(v, 0.0, 1.0));
  }
  for (std::size_t i = 0; i < intensity.size(); ++i) chunk.sum_intensity[i] += intensity[i];
  const std::vector<double> centered = shift_intensity(intensity, g, c.x, c.y);
  for (std::size_t i = 0; i < centered.size(); ++i) chunk.sum_centered[i] += centered[i];
  return rec;
}

}  // namespace detail

// Monte Carlo sweep: sample i uses RngStream(master_seed, i), so the result is
// bit-identical for any thread count (chunks commit in index order and each
// chunk folds its own grids in index order). progress, if set, is called with
// (records done, total) after each committed chunk.
inline SampleSet run_simulation(const ChannelConfig& config, unsigned threads = 1,
                                const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  config.validate();
  SampleSet out;
  out.config = config;
  const std::size_t total = config.sample_count;
  const std::size_t cells = config.grid.size();
  out.records.resize(total);
  out.mean_intensity.assign(cells, 0.0);
  out.mean_intensity_centered.assign(cells, 0.0);

  // Small chunks: each worker buffers two grid-sized partial sums per chunk.
  constexpr std::size_t kChunk = 8;
  ordered_parallel_chunks(
      total, threads, kChunk,
      [&config] { return std::make_unique<Propagator>(config); },
      [&config, cells](std::unique_ptr<Propagator>& prop, std::size_t lo, std::size_t hi) {
        detail::SampleChunk chunk;
        chunk.records.reserve(hi - lo);
        chunk.sum_intensity.assign(cells, 0.0);
        chunk.sum_centered.assign(cells, 0.0);
        std::vector<double> intensity(cells);
        for (std::size_t i = lo; i < hi; ++i) {
          try {
            RngStream rng(config.master_seed, i);
            const ComplexField f = prop->propagate(rng);
            for (std::size_t c = 0; c < cells; ++c) intensity[c] = std::norm(f.a[c]);
            chunk.records.push_back(detail::extract_record(intensity, config, i, chunk));
          } catch (const std::exception& e) {
            throw NumericalError("sample " + std::to_string(i) + ": " + e.what());
          }
        }
        return chunk;
      },
      [&](std::size_t lo, std::size_t hi, detail::SampleChunk&& chunk) {
        for (std::size_t i = lo; i < hi; ++i) out.records[i] = std::move(chunk.records[i - lo]);
        for (std::size_t c = 0; c < cells; ++c) {
          out.mean_intensity[c] += chunk.sum_intensity[c];
          out.mean_intensity_centered[c] += chunk.sum_centered[c];
        }
        if (progress) progress(hi, total);
      });

  const double inv = 1.0 / static_cast<double>(total);
  for (double& v : out.mean_intensity) v *= inv;
  for (double& v : out.mean_intensity_centered) v *= inv;
  return out;
}

// Long-term squared beam radius from the accumulated mean intensity:
// W_LT^2 = 4 * second x-moment about the beam axis, power-normalized.
inline double long_term_width(const SampleSet& set) {
  const GridSpec& g = set.config.grid;
  if (set.mean_intensity.size() != g.size()) throw ConfigError("long_term_width: missing accumulator");
  double p = 0.0, m2 = 0.0;
  for (std::size_t iy = 0; iy < g.n; ++iy) {
    const double* row = set.mean_intensity.data() + iy * g.n;
    for (std::size_t ix = 0; ix < g.n; ++ix) {
      p += row[ix];
      const double x = g.coord(ix);
      m2 += row[ix] * x * x;
    }
  }
  if (p <= 0.0) throw NumericalError("long_term_width: accumulator carries no power");
  return std::sqrt(4.0 * m2 / p);
}

// Variance of one beam-centroid coordinate: unbiased sample variances of x0
// and y0, averaged over the two axes.
inline double wandering_variance(const SampleSet& set) {
  const std::size_t n = set.records.size();
  if (n < 2) throw ConfigError("wandering_variance: need at least two records");
  double mx = 0.0, my = 0.0;
  for (const SampleRecord& r : set.records) {
    mx += r.x0;
    my += r.y0;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double vx = 0.0, vy = 0.0;
  for (const SampleRecord& r : set.records) {
    vx += (r.x0 - mx) * (r.x0 - mx);
    vy += (r.y0 - my) * (r.y0 - my);
  }
  const double denom = static_cast<double>(n - 1);
  return 0.5 * (vx + vy) / denom;
}

// W_ST^2 = W_LT^2 - 4 sigma_bw^2; errors out when wandering exhausts the
// long-term width, where the wandering decomposition has no meaning.
inline double short_term_width(const SampleSet& set) {
  const double wlt = long_term_width(set);
  const double w2 = wlt * wlt - 4.0 * wandering_variance(set);
  if (w2 <= 0.0) {
    throw NumericalError(
        "short_term_width: centroid wandering exceeds the long-term spot size; "
        "wandering-based models are not applicable to this sample set");
  }
  return std::sqrt(w2);
}

// Mean transmittance of a disc from the accumulated mean intensity.
inline double mean_eta_from_intensity(const SampleSet& set, double radius) {
  return std::clamp(disc_integral(set.mean_intensity, set.config.grid, radius, 0.0, 0.0), 0.0, 1.0);
}

inline double mean_transmittance(const SampleSet& set, std::size_t aperture, bool tracked = false) {
  if (aperture >= set.config.aperture_radii.size()) {
    throw ConfigError("mean_transmittance: aperture index out of range");
  }
  if (set.records.empty()) throw ConfigError("mean_transmittance: empty sample set");
  double acc = 0.0;
  for (const SampleRecord& r : set.records) {
    acc += tracked ? r.eta_tracked[aperture] : r.eta[aperture];
  }
  return acc / static_cast<double>(set.records.size());
}

// ---------------------------------------------------------------------------
// Persistence. Layout (all little-endian):
//   "ATMQ" | u16 version=1 | u64 config text length | config JSON text |
//   u64 record count | u32 aperture count | u32 points per axis | f64 step |
//   records as f64 rows [index, eta[0..A), x0, y0, Sxx, Sxy, Syy,
//   etaT[0..A), W1sq, W2sq] | mean intensity grid | centered grid | u64 CRC64
// The CRC covers every byte before it.

namespace detail {

inline void put_u16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& b, double v) { put_u64(b, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
 public:
  ByteReader(const unsigned char* p, std::size_t n) : p_(p), n_(n) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(byte() | (byte() << 8)); }

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string text(std::size_t len) {
    need(len);
    std::string s(reinterpret_cast<const char*>(p_ + off_), len);
    off_ += len;
    return s;
  }

  std::size_t remaining() const { return n_ - off_; }

 private:
  std::uint32_t byte() {
    need(1);
    return p_[off_++];
  }

  void need(std::size_t k) {
    if (off_ + k > n_) throw IoError("sample file truncated (checksum failure)");
  }

  const unsigned char* p_;
  std::size_t n_;
  std::size_t off_ = 0;
};

}  // namespace detail

inline constexpr std::uint16_t kSampleFileVersion = 1;

inline void save_samples(const SampleSet& set, const std::string& path) {
  const std::size_t n_ap = set.config.aperture_radii.size();
  const std::size_t cells = set.config.grid.size();
  if (set.mean_intensity.size() != cells || set.mean_intensity_centered.size() != cells) {
    throw ConfigError("save_samples: accumulator grids do not match the configuration");
  }
  for (const SampleRecord& r : set.records) {
    if (r.eta.size() != n_ap || r.eta_tracked.size() != n_ap) {
      throw ConfigError("save_samples: record aperture count does not match the configuration");
    }
  }

  std::string buf;
  const std::string cfg_text = canonical_dump(set.config);
  buf.reserve(64 + cfg_text.size() + set.records.size() * (9 + 2 * n_ap) * 8 + 2 * cells * 8);
  buf += "ATMQ";
  detail::put_u16(buf, kSampleFileVersion);
  detail::put_u64(buf, cfg_text.size());
  buf += cfg_text;
  detail::put_u64(buf, set.records.size());
  detail::put_u32(buf, static_cast<std::uint32_t>(n_ap));
  detail::put_u32(buf, static_cast<std::uint32_t>(set.config.grid.n));
  detail::put_f64(buf, set.config.grid.step);
  for (const SampleRecord& r : set.records) {
    detail::put_f64(buf, static_cast<double>(r.index));
    for (double v : r.eta) detail::put_f64(buf, v);
    detail::put_f64(buf, r.x0);
    detail::put_f64(buf, r.y0);
    detail::put_f64(buf, r.Sxx);
    detail::put_f64(buf, r.Sxy);
    detail::put_f64(buf, r.Syy);
    for (double v : r.eta_tracked) detail::put_f64(buf, v);
    detail::put_f64(buf, r.W1sq);
    detail::put_f64(buf, r.W2sq);
  }
  for (double v : set.mean_intensity) detail::put_f64(buf, v);
  for (double v : set.mean_intensity_centered) detail::put_f64(buf, v);
  detail::put_u64(buf, crc64(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_samples: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("save_samples: write failed for " + path);
}

inline SampleSet load_samples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_samples: cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());

  if (data.size() < 14) throw IoError("sample file truncated (checksum failure)");
  if (data.compare(0, 4, "ATMQ") != 0) throw IoError("not a sample file (bad magic)");
  detail::ByteReader head(bytes + 4, 2);
  const std::uint16_t version = head.u16();
  if (version != kSampleFileVersion) {
    throw IoError("unsupported sample file version " + std::to_string(version) +
                  " (this reader supports version " + std::to_string(kSampleFileVersion) + ")");
  }
  detail::ByteReader tail(bytes + data.size() - 8, 8);
  const std::uint64_t stored = tail.u64();
  if (crc64(data.data(), data.size() - 8) != stored) {
    throw IoError("sample file checksum failure");
  }

  detail::ByteReader r(bytes + 6, data.size() - 14);
  SampleSet set;
  const std::uint64_t cfg_len = r.u64();
  set.config = parse_config_text(r.text(cfg_len));
  const std::uint64_t n_rec = r.u64();
  const std::uint32_t n_ap = r.u32();
  const std::uint32_t n_grid = r.u32();
  const double step = r.f64();
  if (n_ap != set.config.aperture_radii.size() || n_grid != set.config.grid.n ||
      step != set.config.grid.step || n_rec != set.config.sample_count) {
    throw IoError("sample file header disagrees with its embedded configuration");
  }
  set.records.reserve(n_rec);
  for (std::uint64_t i = 0; i < n_rec; ++i) {
    SampleRecord rec;
    rec.index = static_cast<std::uint64_t>(r.f64());
    rec.eta.resize(n_ap);
    for (double& v : rec.eta) v = r.f64();
    rec.x0 = r.f64();
    rec.y0 = r.f64();
    rec.Sxx = r.f64();
    rec.Sxy = r.f64();
    rec.Syy = r.f64();
    rec.eta_tracked.resize(n_ap);
    for (double& v : rec.eta_tracked) v = r.f64();
    rec.W1sq = r.f64();
    rec.W2sq = r.f64();
    set.records.push_back(std::move(rec));
  }
  const std::size_t cells = set.config.grid.size();
  set.mean_intensity.resize(cells);
  for (double& v : set.mean_intensity) v = r.f64();
  set.mean_intensity_centered.resize(cells);
  for (double& v : set.mean_intensity_centered) v = r.f64();
  if (r.remaining() != 0) throw IoError("sample file has trailing bytes (checksum failure)");
  return set;
}

// One row per record; the header names every column.
inline void export_csv(const SampleSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("export_csv: cannot open " + path);
  const std::size_t n_ap = set.config.aperture_radii.size();
  out << "index";
  for (std::size_t a = 0; a < n_ap; ++a) out << ",eta_R" << a;
  out << ",x0,y0,Sxx,Sxy,Syy";
  for (std::size_t a = 0; a < n_ap; ++a) out << ",etaT_R" << a;
  out << ",W1sq,W2sq\n";
  char num[32];
  const auto put = [&](double v) {
    std::snprintf(num, sizeof(num), "%.17g", v);
    out << ',' << num;
  };
  for (const SampleRecord& rec : set.records) {
    out << rec.index;
    for (double v : rec.eta) put(v);
    put(rec.x0);
    put(rec.y0);
    put(rec.Sxx);
    put(rec.Sxy);
    put(rec.Syy);
    for (double v : rec.eta_tracked) put(v);
    put(rec.W1sq);
    put(rec.W2sq);
    out << '\n';
  }
  if (!out) throw IoError("export_csv: write failed for " + path);
}

}  // namespace atmq
