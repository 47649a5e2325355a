#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace selfsim {

/// Number of workers used when the caller passes threads <= 0.
inline int resolve_threads(int threads) {
#ifdef _OPENMP
  return threads > 0 ? threads : omp_get_max_threads();
#else
  (void)threads;
  return 1;
#endif
}

/// Runs fn(i) for i in [0, n) on `threads` workers. Callers write results
/// into per-index slots, so the outcome never depends on scheduling. The
/// first exception thrown by any task is rethrown after the loop.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  std::exception_ptr error;
  std::mutex error_mutex;
  const long count = static_cast<long>(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(threads))
#endif
  for (long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  (void)threads;
  if (error) std::rethrow_exception(error);
}

}  // namespace selfsim
