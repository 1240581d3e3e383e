#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace screenequil {

// Worker count: SCREENEQUIL_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SCREENEQUIL_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return std::min<unsigned>(static_cast<unsigned>(n), std::max(hw, 1u) * 4);
  }
  return hw;
}

// out[i] = fn(i). Indices are split into fixed contiguous blocks, so results never depend on timing.
template <class T, class Fn>
std::vector<T> parallel_map(size_t n, Fn&& fn) {
  std::vector<T> out(n);
  const size_t workers = std::min<size_t>(worker_count(), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const size_t lo = n * w / workers, hi = n * (w + 1) / workers;
      try {
        for (size_t i = lo; i < hi; ++i) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace screenequil
