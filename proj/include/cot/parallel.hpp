#pragma once

// Include this instead of <omp.h> so kernels compile with or without OpenMP.

#if defined(_OPENMP)
#include <omp.h>
namespace cot {
constexpr bool use_omp = true;
}  // namespace cot
#else
namespace cot {
constexpr bool use_omp = false;
}  // namespace cot
inline int omp_get_thread_num() { return 0; }
inline int omp_get_max_threads() { return 1; }
inline void omp_set_num_threads(int) {}
#endif

namespace cot {

/// Caps internal parallelism from the CT_THREADS environment variable
/// (default 1). Returns the thread count in effect.
int configure_threads_from_env();

}  // namespace cot
