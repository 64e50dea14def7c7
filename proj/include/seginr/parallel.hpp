#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace seginr {

// Worker cap for data-parallel sweeps. SEGINR_THREADS overrides the hardware
// default.
inline unsigned thread_budget() {
  if (const char* env = std::getenv("SEGINR_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

// Runs fn(i) for every i in [0, n). Callers write results by index, so the
// outcome never depends on scheduling.
template <class Fn>
inline void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t budget = std::min<std::size_t>(thread_budget(), n);
  if (budget <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(budget - 1);
  for (std::size_t t = 0; t + 1 < budget; ++t) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace seginr
