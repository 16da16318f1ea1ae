#pragma once

#include <complex>
#include <cstring>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "atmq/grid.hpp"

namespace atmq {

namespace detail {
/// FFTW plan creation is not thread safe; executions are.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// 2-D complex DFT on an n x n grid. Plans are created with FFTW_ESTIMATE so
/// the plan (and therefore the executed algorithm) depends only on the grid
/// size, never on runtime measurements; combined with an internal aligned
/// work buffer this makes transforms bit-reproducible across runs and across
/// callers regardless of the alignment of their data.
///
/// forward()/backward() use the unitary convention (1/n scaling per
/// direction) so a round trip is the identity and Parseval sums hold
/// without extra factors. backward_raw() applies no scaling: it computes the
/// plain synthesis sum over modes, which is what spectral screen synthesis
/// needs.
class Fft2d {
 public:
  explicit Fft2d(std::size_t n) : n_(n) {
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * n));
    if (!buf_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fwd_ = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buf_, buf_,
                            FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buf_, buf_,
                            FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) {
      fftw_free(buf_);
      throw std::runtime_error("fftw plan creation failed");
    }
  }

  ~Fft2d() {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }

  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  std::size_t n() const { return n_; }

  /// In-place unitary forward DFT (analysis with e^{-i k r} kernel).
  void forward(std::vector<std::complex<double>>& a) { run(a, fwd_, 1.0 / static_cast<double>(n_)); }

  /// In-place unitary backward DFT (synthesis with e^{+i k r} kernel).
  void backward(std::vector<std::complex<double>>& a) { run(a, bwd_, 1.0 / static_cast<double>(n_)); }

  /// In-place unnormalized backward DFT: a_out(r) = sum_k a_in(k) e^{+i k r}.
  void backward_raw(std::vector<std::complex<double>>& a) { run(a, bwd_, 1.0); }

 private:
  void run(std::vector<std::complex<double>>& a, fftw_plan plan, double scale) {
    if (a.size() != n_ * n_)
      throw ConfigError("fft buffer size does not match plan grid");
    std::memcpy(static_cast<void*>(buf_), a.data(), sizeof(fftw_complex) * a.size());
    fftw_execute(plan);
    auto* out = reinterpret_cast<std::complex<double>*>(buf_);
    if (scale == 1.0) {
      std::memcpy(static_cast<void*>(a.data()), buf_, sizeof(fftw_complex) * a.size());
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = out[i] * scale;
    }
  }

  std::size_t n_;
  fftw_complex* buf_;
  fftw_plan fwd_;
  fftw_plan bwd_;
};

}  // namespace atmq
