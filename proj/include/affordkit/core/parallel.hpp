#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace affordkit {

/// Worker count for internal parallelism. `requested` 0 means auto;
/// the AFFORDKIT_THREADS environment variable caps the result (0 = auto).
inline int thread_budget(int requested = 0) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("AFFORDKIT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

/// Runs fn(i) for i in [0, count) across `threads` workers in contiguous blocks.
/// Each index is visited exactly once; fn must not touch another index's state.
inline void parallel_for(int count, const std::function<void(int)>& fn, int threads = 0) {
  const int workers = std::min(thread_budget(threads), std::max(count, 1));
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int block = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * block;
    const int hi = std::min(count, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace affordkit
