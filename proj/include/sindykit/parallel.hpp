#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace sindykit {

/// requested > 0 wins; otherwise SINDYKIT_THREADS, otherwise hardware
/// concurrency. Always >= 1.
int resolve_threads(int requested);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// processed exactly once; if any calls throw, the exception of the lowest
/// failing index is rethrown after all workers finish.
template <class Body>
void parallel_for(std::ptrdiff_t n, int threads, Body&& body) {
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<std::ptrdiff_t>(std::max(threads, 1), n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  if (workers == 1) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::ptrdiff_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::ptrdiff_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace sindykit
