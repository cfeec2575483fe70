#include "openset/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace openset {

namespace {
std::atomic<std::size_t> g_threads{1};
// Nested parallel_for calls run inline on the worker that issued them.
thread_local bool t_in_worker = false;
}

void set_thread_count(std::size_t n) { g_threads.store(n); }

std::size_t thread_count() {
  const std::size_t n = g_threads.load();
  if (n != 0) return n;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = t_in_worker ? 1 : std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(n, begin + block);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      t_in_worker = true;
      try {
        for (std::size_t i = begin; i < end && !failed.load(std::memory_order_relaxed); ++i) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace openset
