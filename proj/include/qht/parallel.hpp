#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace qht {

namespace detail {
inline std::atomic<int>& thread_limit_storage() {
  static std::atomic<int> limit{static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))};
  return limit;
}
}  // namespace detail

/// Caps the number of worker threads used by every parallel loop.
inline void set_thread_limit(int n) { detail::thread_limit_storage() = std::max(1, n); }
inline int thread_limit() { return detail::thread_limit_storage(); }

/// Runs f(i) for i in [0, count). Work is split into contiguous static
/// blocks; callers write results to slot i so output never depends on the
/// worker count. The first exception thrown by any worker is rethrown.
template <class F>
void parallel_for(std::size_t count, F&& f) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(thread_limit()), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        const std::size_t begin = count * w / workers;
        const std::size_t end = count * (w + 1) / workers;
        try {
          for (std::size_t i = begin; i < end; ++i) f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

/// Fixed-shape pairwise (tree) summation; the result depends only on the
/// order of `values`.
template <class T>
T pairwise_sum(std::span<const T> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    T acc{};
    for (const T& v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

template <class T>
T pairwise_sum(const std::vector<T>& values) {
  return pairwise_sum(std::span<const T>(values));
}

}  // namespace qht
