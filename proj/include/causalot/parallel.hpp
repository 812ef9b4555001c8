// parallel.hpp -- deterministic fork-join map over an index range.
//
// Results are computed per index and written into a presized vector, so the
// outcome is independent of thread count and scheduling. Worker count comes
// from the caller, the CAUSAL_OT_WORKERS environment variable, or the
// hardware concurrency, in that order.
#pragma once

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace causalot {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CAUSAL_OT_WORKERS")) {
    int w = std::atoi(env);
    if (w > 0) return w;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? (int)hw : 1;
}

// Applies fn(i) for i in [0, count) and returns the results in index order.
// fn must be safe to call concurrently for distinct indices.
template <class R, class Fn>
std::vector<R> parallel_map(std::size_t count, Fn fn, int workers = 0) {
  std::vector<R> out(count);
  int w = resolve_workers(workers);
  if (w <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  auto body = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      out[i] = fn(i);
    }
  };
  std::vector<std::thread> pool;
  int spawn = std::min<std::size_t>((std::size_t)w, count);
  for (int t = 0; t < spawn; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace causalot
