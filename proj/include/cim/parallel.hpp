#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace cim {

// Worker count: --threads if set (>0), otherwise CIM_THREADS, otherwise hardware.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CIM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(i) for i in [0,n). Each index writes only to its own output slot,
// so results are independent of the thread count and of scheduling; callers
// fold the slots sequentially afterwards.
template <typename Body>
void parallel_for(std::int64_t n, int threads, Body&& body) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  if (static_cast<std::int64_t>(threads) > n) threads = static_cast<int>(n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::int64_t i = t; i < n; i += threads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace cim
