#include "gscreen/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace gscreen {

namespace {
std::atomic<int> g_workers{1};
}

int worker_count() { return g_workers.load(); }

void set_worker_count(int n) {
  if (n < 1) n = 1;
  g_workers.store(n);
}

namespace detail {

void parallel_for_impl(std::size_t n, void (*fn)(void*, std::size_t), void* ctx) {
  int workers = worker_count();
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(ctx, i);
    return;
  }
  if (static_cast<std::size_t>(workers) > n) workers = static_cast<int>(n);
  std::atomic<std::size_t> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = cursor.fetch_add(1);
        if (i >= n) break;
        fn(ctx, i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail
}  // namespace gscreen
