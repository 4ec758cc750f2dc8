#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace wnlab {

/// Resolve a worker count: 0 means hardware concurrency.
inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// out[k] = fn(k) for k in [0, count). Results are stored by index, so the
/// output does not depend on the worker count. The first exception thrown by
/// any task is rethrown after all workers join.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t count, Fn&& fn, int workers = 0) {
  std::vector<T> out(count);
  const int w = std::min<int>(resolve_workers(workers), static_cast<int>(std::max<std::size_t>(count, 1)));
  if (w <= 1) {
    for (std::size_t k = 0; k < count; ++k) out[k] = fn(k);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        out[k] = fn(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < w; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

/// Pairwise summation with a fixed split order.
inline double tree_sum(std::span<const double> v) {
  if (v.empty()) return 0.0;
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return tree_sum(v.first(h)) + tree_sum(v.subspan(h));
}

inline double tree_sum(const std::vector<double>& v) { return tree_sum(std::span<const double>(v)); }

}  // namespace wnlab
