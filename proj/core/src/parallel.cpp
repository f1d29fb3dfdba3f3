#include "paintlab/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace paintlab {

std::size_t worker_count() {
  static const std::size_t count = [] {
    if (const char* env = std::getenv("LAB_THREADS")) {
      try {
        const long v = std::stol(env);
        if (v >= 1) return static_cast<std::size_t>(v);
      } catch (...) {
      }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }();
  return count;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    if (n) body(0, n);
    return;
  }
  // Exceptions are rethrown on the caller, lowest chunk first.
  std::vector<std::exception_ptr> errors(workers);
  const auto run = [&body, &errors](std::size_t w, std::size_t begin, std::size_t end) {
    try {
      body(begin, end);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back(run, w, begin, end);
  }
  run(0, 0, std::min(n, chunk));
  for (auto& t : threads) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace paintlab
