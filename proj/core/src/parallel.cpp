#include "spectralds/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace spectralds {

namespace {

std::atomic<std::size_t> g_override{0};

std::size_t env_threads() {
  const char* value = std::getenv("SPECTRALDS_THREADS");
  if (value == nullptr || *value == '\0') return 0;
  try {
    long parsed = std::stol(value);
    return parsed > 0 ? static_cast<std::size_t>(parsed) : 0;
  } catch (...) {
    return 0;
  }
}

}  // namespace

std::size_t thread_count() {
  if (std::size_t forced = g_override.load(); forced > 0) return forced;
  if (std::size_t env = env_threads(); env > 0) return env;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void set_thread_count(std::size_t threads) { g_override.store(threads); }

std::size_t thread_override() { return g_override.load(); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  std::size_t workers = std::min(thread_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace spectralds
