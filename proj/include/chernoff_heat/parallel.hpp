#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace chernoff_heat {

namespace detail {
inline std::atomic<unsigned>& max_threads_storage() {
  static std::atomic<unsigned> value{0};
  return value;
}
}  // namespace detail

/// Caps worker threads used for row-parallel assembly. 0 means hardware concurrency.
inline void set_max_threads(unsigned n) { detail::max_threads_storage() = n; }

inline unsigned max_threads() {
  const unsigned cap = detail::max_threads_storage();
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return cap == 0 ? hw : std::min(cap, hw);
}

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// visited by exactly one worker, so row-independent work stays deterministic.
template <class Body>
void parallel_for_rows(std::ptrdiff_t n, Body&& body) {
  const auto workers = static_cast<std::ptrdiff_t>(std::min<unsigned>(max_threads(), 64));
  if (workers <= 1 || n < 64) {
    body(std::ptrdiff_t{0}, n);
    return;
  }
  const std::ptrdiff_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (std::ptrdiff_t w = 0; w < workers; ++w) {
    const std::ptrdiff_t begin = w * chunk;
    const std::ptrdiff_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace chernoff_heat
