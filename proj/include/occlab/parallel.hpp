#pragma once
// Minimal deterministic parallel loop: work items are indexed, workers pull
// from an atomic cursor, and callers write results into preallocated slots,
// so the output never depends on the schedule.

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace occlab {

/// Thread budget: OCCUPANCY_THREADS when set, hardware concurrency otherwise.
int default_thread_count();

inline void parallel_for(std::uint64_t n, int threads, const std::function<void(std::uint64_t)>& fn) {
  if (threads <= 0) threads = default_thread_count();
  if (threads <= 1 || n <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> cursor{0};
  auto worker = [&] {
    for (;;) {
      std::uint64_t i = cursor.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  int k = int(std::min<std::uint64_t>(std::uint64_t(threads), n));
  pool.reserve(k - 1);
  for (int w = 1; w < k; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace occlab
