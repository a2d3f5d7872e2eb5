#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace recdyn {

/// Runs body(i) for i in [0, count). The parallel path distributes
/// iterations across OpenMP threads; the serial path is the plain loop kept
/// as the reference implementation. Bodies must write only to their own
/// output slot, which makes both paths bit-identical at any thread count.
template <class F>
void parallel_for(std::int64_t count, bool parallel, F&& body) {
#ifdef _OPENMP
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < count; ++i) body(i);
        return;
    }
#else
    (void)parallel;
#endif
    for (std::int64_t i = 0; i < count; ++i) body(i);
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace recdyn
