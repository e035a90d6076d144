#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace masem {

/// Worker count, capped by the MASEM_THREADS environment variable.
inline unsigned thread_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MASEM_THREADS")) {
    try {
      long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(std::min<long>(v, 1024));
    } catch (...) {
    }
  }
  return hw;
}

namespace detail {
inline thread_local bool inside_worker = false;
}  // namespace detail

/// Static-chunked parallel loop over [0, n). The body must only write to
/// index-owned state so results do not depend on the worker count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& body, std::size_t min_chunk = 16) {
  unsigned workers = thread_count();
  if (n == 0) return;
  std::size_t max_workers = (n + min_chunk - 1) / min_chunk;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, max_workers));
  if (workers <= 1 || detail::inside_worker) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      detail::inside_worker = true;
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace masem
