// Small deterministic parallel helpers: contiguous chunking for index ranges
// and an atomic work queue for uneven task lists.  Callers own determinism by
// deriving all randomness from the item index, never from the thread.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

namespace matchmarket {

// 0 requests one worker per hardware core.
inline int resolve_threads(int requested) {
  if (requested < 0)
    throw std::invalid_argument("resolve_threads: thread count must be >= 0");
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(chunk_index, begin, end) over a partition of [0, total) into at
// most `threads` contiguous chunks; chunk 0 runs on the calling thread.  The
// first failing chunk's exception is rethrown after all workers join.
template <typename Fn>
void parallel_chunks(std::int64_t total, int threads, Fn&& fn) {
  if (total <= 0) return;
  const int workers = resolve_threads(threads);
  const std::int64_t chunks =
      std::min<std::int64_t>(workers, total);
  if (chunks <= 1) {
    fn(0, std::int64_t(0), total);
    return;
  }
  const std::int64_t base = total / chunks;
  const std::int64_t extra = total % chunks;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
  auto run = [&fn, &errors](std::int64_t chunk, std::int64_t begin,
                            std::int64_t end) {
    try {
      fn(static_cast<int>(chunk), begin, end);
    } catch (...) {
      errors[static_cast<std::size_t>(chunk)] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(chunks - 1));
  std::int64_t begin = base + (extra > 0 ? 1 : 0);  // chunk 0 handled inline
  for (std::int64_t chunk = 1; chunk < chunks; ++chunk) {
    const std::int64_t end = begin + base + (chunk < extra ? 1 : 0);
    pool.emplace_back(run, chunk, begin, end);
    begin = end;
  }
  run(0, 0, base + (extra > 0 ? 1 : 0));
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Runs fn(item) for every item in [0, total), items handed out through an
// atomic counter so long tasks do not serialize behind one worker.
template <typename Fn>
void parallel_queue(std::int64_t total, int threads, Fn&& fn) {
  if (total <= 0) return;
  const int workers =
      static_cast<int>(std::min<std::int64_t>(resolve_threads(threads), total));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto worker = [&](int w) {
    try {
      for (;;) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= total) return;
        fn(i);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker, w);
  worker(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace matchmarket
