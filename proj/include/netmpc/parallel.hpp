#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace netmpc {

// Runs fn(i) for i in [0, count) across up to `jobs` threads. Items must not
// share mutable state. The first exception wins and is rethrown after all
// workers drain.
inline void parallel_for(long count, int jobs,
                         const std::function<void(long)>& fn) {
  if (count <= 0) return;
  int workers = jobs < 1 ? 1 : static_cast<int>(std::min<long>(jobs, count));
  if (workers == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        long i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace netmpc
