// parallel.hpp - thin OpenMP wrapper. Loops with disjoint writes can always run
// parallel; order-sensitive accumulation must go through the serial path when
// deterministic mode is requested.
#pragma once

#include <cstdint>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace grrecon {

inline int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Parallel loop over [0, n) with disjoint writes. body must be safe to run
// concurrently for distinct indices.
template <typename Body>
void parallel_for(std::int64_t n, const Body& body) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
        body(i);
#else
    for (std::int64_t i = 0; i < n; ++i)
        body(i);
#endif
}

}  // namespace grrecon
