#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace tempo_conformal {

// Worker cap: TEMPO_CONFORMAL_THREADS wins over hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("TEMPO_CONFORMAL_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && static_cast<unsigned>(v) < hw) return static_cast<unsigned>(v);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return hw;
}

// Chunked parallel loop over [0, n). Each chunk writes disjoint output slots,
// so results are identical to sequential execution regardless of thread count.
// The first exception thrown by any chunk is rethrown on the calling thread.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  unsigned workers = worker_count();
  if (workers <= 1 || n < 2048) {
    body(0, n);
    return;
  }
  if (workers > n) workers = static_cast<unsigned>(n);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = static_cast<std::size_t>(w) * chunk;
    if (begin >= n) break;
    const std::size_t end = begin + chunk < n ? begin + chunk : n;
    threads.emplace_back([&body, &error = errors[w], begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace tempo_conformal
