#pragma once

#include <cstddef>

namespace gscreen {

/// Worker cap shared by all parallel loops (set from --threads or
/// GSCREEN_THREADS).  Defaults to 1; results are independent of the cap
/// because every loop writes by index and reduces in order.
int worker_count();
void set_worker_count(int n);

namespace detail {
void parallel_for_impl(std::size_t n, void (*fn)(void*, std::size_t), void* ctx);
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
  detail::parallel_for_impl(
      n, [](void* ctx, std::size_t i) { (*static_cast<F*>(ctx))(i); }, &f);
}

}  // namespace gscreen
