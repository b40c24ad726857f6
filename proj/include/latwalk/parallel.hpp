#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace latwalk {

inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(chunk) for chunk in [0, chunk_count), distributing chunks over a
// worker pool.  Chunks must be independent and write only to per-chunk
// slots; the caller combines slots in chunk order afterwards, which is what
// makes results identical for any thread count.  The first exception thrown
// by a chunk is rethrown on the calling thread.
inline void parallel_for_chunks(int chunk_count, int threads,
                                const std::function<void(int)>& fn) {
  threads = std::min(resolve_thread_count(threads), chunk_count);
  if (threads <= 1) {
    for (int c = 0; c < chunk_count; ++c) fn(c);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= chunk_count) return;
      try {
        fn(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace latwalk
