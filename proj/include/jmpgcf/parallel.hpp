#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace jmpgcf {

/// Caps the number of threads used by row-parallel kernels. Every parallel loop
/// in the library writes disjoint outputs and reduces sequentially, so results do
/// not depend on the worker count.
inline void set_workers(int n) {
#ifdef _OPENMP
    if (n >= 1) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

inline int workers() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace jmpgcf
