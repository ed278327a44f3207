#ifndef UTURNLAB_PARALLEL_HPP
#define UTURNLAB_PARALLEL_HPP

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace uturnlab {

// Resolve a thread-count request: n >= 1 is taken as-is, 0 means "auto"
// (UTURNLAB_THREADS if set, else hardware concurrency).
inline int resolve_threads(int requested) {
  if (requested >= 1) return requested;
  if (const char* env = std::getenv("UTURNLAB_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw >= 1 ? static_cast<int>(hw) : 1;
}

// Run fn(task) for task = 0..n_tasks-1 on a pool of workers.  Tasks are
// claimed through an atomic counter, so scheduling is nondeterministic, but
// each task must be a pure function of its index writing only to its own
// pre-allocated output slots; results are then independent of worker count.
inline void parallel_tasks(std::int64_t n_tasks, int n_threads,
                           const std::function<void(std::int64_t)>& fn) {
  n_threads = resolve_threads(n_threads);
  if (n_threads <= 1 || n_tasks <= 1) {
    for (std::int64_t t = 0; t < n_tasks; ++t) fn(t);
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::int64_t t = next.fetch_add(1);
      if (t >= n_tasks) return;
      fn(t);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace uturnlab

#endif
