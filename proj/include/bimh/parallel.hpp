#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bimh {

// Runs body(i) for i in [0, n) on up to `workers` threads. Each index is
// visited exactly once; callers write results into per-index slots so the
// outcome is independent of scheduling. The first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

// Pairwise summation with a fixed split tree: the result depends only on the
// values and their order.
template <typename T, typename Get>
T pairwise_sum(std::size_t begin, std::size_t end, Get&& get) {
  if (end <= begin) return T{};
  if (end - begin <= 8) {
    T acc = get(begin);
    for (std::size_t i = begin + 1; i < end; ++i) acc += get(i);
    return acc;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  T left = pairwise_sum<T>(begin, mid, get);
  left += pairwise_sum<T>(mid, end, get);
  return left;
}

}  // namespace bimh
