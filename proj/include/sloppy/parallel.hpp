#pragma once

#include <cstddef>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sloppy {

// Worker cap: min(OpenMP default, SLOPPY_REDUCE_THREADS if set).
inline int max_threads() {
  int n = 1;
#ifdef _OPENMP
  n = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("SLOPPY_REDUCE_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1 && cap < n) n = cap;
  }
  return n;
}

// Parallel loop over [0, n).  Bodies must write only to their own slot so
// the result is byte-identical for any worker count; all accumulation
// happens serially afterwards.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
#ifdef _OPENMP
  const int nt = max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    fn(static_cast<std::size_t>(i));
#else
  for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

// Serial reference for the same loop shape; used by tests and the
// benchmark to check and time the parallel path.
template <class F>
void serial_for(std::size_t n, F&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace sloppy
