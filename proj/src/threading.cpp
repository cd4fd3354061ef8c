#include "flowbench/threading.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace flowbench {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads.store(n < 1 ? 1 : n); }

int thread_count() { return g_threads.load(); }

int threads_from_env(int fallback) {
  const char* raw = std::getenv("FLOWBENCH_THREADS");
  if (raw == nullptr) return fallback;
  try {
    int n = std::stoi(raw);
    return n >= 1 ? n : fallback;
  } catch (...) {
    return fallback;
  }
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::int64_t chunk = std::max<std::int64_t>(1, n / (4 * workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      try {
        for (;;) {
          if (failed.load()) return;
          const std::int64_t begin = next.fetch_add(chunk);
          if (begin >= n) return;
          const std::int64_t end = std::min(begin + chunk, n);
          for (std::int64_t i = begin; i < end; ++i) fn(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace flowbench
