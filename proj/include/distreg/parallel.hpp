#pragma once

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace distreg {

/// Run f(0..tasks-1) across a worker pool. Each task writes only its own
/// result slot, so the outcome does not depend on scheduling. The first
/// exception thrown by any task is rethrown after the pool joins.
template <typename F>
void parallel_for(int tasks, int workers, F&& f) {
  if (workers <= 1 || tasks <= 1) {
    for (int i = 0; i < tasks; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const int count = std::min(workers, tasks);
  for (int w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < tasks; i = next.fetch_add(1)) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace distreg
