#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

namespace atmq {

inline unsigned resolve_thread_count(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Runs work(ctx, lo, hi) over [0, n) split into fixed chunks and commits the
// chunk results in strict ascending chunk order, so any thread count produces
// bit-identical commit sequences as long as work depends only on the index
// range and its own context.
//
// A worker buffers one finished chunk and commits it once the cursor reaches
// that chunk, so at most one pending result exists per thread. Chunks are
// claimed in ascending order, hence the smallest outstanding chunk is always
// held by some worker, which rules out commit deadlock. commit runs under the
// commit lock and must not call back into this function.
template <typename MakeContext, typename WorkChunk, typename CommitChunk>
void ordered_parallel_chunks(std::size_t n, unsigned threads, std::size_t chunk_size,
                             MakeContext make_context, WorkChunk work, CommitChunk commit) {
  if (n == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  threads = resolve_thread_count(threads);
  const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  if (threads <= 1 || n_chunks <= 1) {
    auto ctx = make_context();
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const std::size_t lo = c * chunk_size;
      const std::size_t hi = std::min(n, lo + chunk_size);
      commit(lo, hi, work(ctx, lo, hi));
    }
    return;
  }

  std::atomic<std::size_t> next_claim{0};
  std::mutex m;
  std::condition_variable cv;
  std::size_t next_commit = 0;     // guarded by m
  bool aborted = false;            // guarded by m
  std::exception_ptr first_error;  // guarded by m

  auto runner = [&]() {
    try {
      auto ctx = make_context();
      for (;;) {
        const std::size_t c = next_claim.fetch_add(1);
        if (c >= n_chunks) return;
        {
          std::lock_guard<std::mutex> lk(m);
          if (aborted) return;
        }
        const std::size_t lo = c * chunk_size;
        const std::size_t hi = std::min(n, lo + chunk_size);
        auto result = work(ctx, lo, hi);
        std::unique_lock<std::mutex> lk(m);
        cv.wait(lk, [&] { return aborted || next_commit == c; });
        if (aborted) return;
        commit(lo, hi, std::move(result));
        ++next_commit;
        cv.notify_all();
      }
    } catch (...) {
      std::lock_guard<std::mutex> lk(m);
      if (!first_error) first_error = std::current_exception();
      aborted = true;
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(runner);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Per-index variant: work(ctx, i) -> item, fold(i, item) called for
// i = 0, 1, ..., n-1 in order regardless of the thread count.
template <typename MakeContext, typename Work, typename Fold>
void ordered_parallel_for(std::size_t n, unsigned threads, MakeContext make_context,
                          Work work, Fold fold) {
  using Ctx = decltype(make_context());
  using R = std::invoke_result_t<Work&, Ctx&, std::size_t>;
  ordered_parallel_chunks(
      n, threads, 64, std::move(make_context),
      [&work](Ctx& ctx, std::size_t lo, std::size_t hi) {
        std::vector<R> buf;
        buf.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) buf.push_back(work(ctx, i));
        return buf;
      },
      [&fold](std::size_t lo, std::size_t hi, std::vector<R>&& buf) {
        for (std::size_t i = lo; i < hi; ++i) fold(i, std::move(buf[i - lo]));
      });
}

}  // namespace atmq
