#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace netx {

// Worker count from NETX_WORKERS, else hardware concurrency. Results never
// depend on this value; it only changes wall time.
inline unsigned default_workers() {
  if (const char* env = std::getenv("NETX_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Calls fn(i) for every i in [0, n). Items are claimed dynamically, so fn
// must write only to slot i (or to thread-local state merged order-independently).
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Splits [0, n) into `workers` contiguous chunks and calls fn(chunk, begin, end).
// Used when each worker keeps private accumulators that are summed afterwards.
template <typename Fn>
void parallel_chunks(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1))));
  std::size_t per = (n + workers - 1) / workers;
  parallel_for(workers, workers, [&](std::size_t w) {
    std::size_t begin = std::min(n, w * per);
    std::size_t end = std::min(n, begin + per);
    fn(w, begin, end);
  });
}

}  // namespace netx
