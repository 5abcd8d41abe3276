#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace isopsm {

// Worker count: hardware concurrency, capped by the ISOPSM_THREADS env var.
inline unsigned worker_count() {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("ISOPSM_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && v < 4096) n = static_cast<unsigned>(v);
  }
  return n;
}

// Runs body(i) for i in [0, count) across worker threads.  Tasks are handed
// out via an atomic counter; callers must write results into per-index slots
// so the reduction order stays fixed regardless of scheduling.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  unsigned workers = worker_count();
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  unsigned spawn = static_cast<unsigned>(
      std::min<std::size_t>(workers, count));
  pool.reserve(spawn);
  for (unsigned t = 0; t < spawn; ++t) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace isopsm
