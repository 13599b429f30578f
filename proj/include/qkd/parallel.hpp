#pragma once

#include <cstdint>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qkd {

// Threads actually used for a request of `n` (0 = library default).
// QKD_THREADS overrides the OpenMP default when set.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("QKD_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Static-schedule loop over [0, n). Each index must be independent of the
// others; reductions are done by the caller on the filled output buffers so
// results do not depend on the thread count.
template <class Body>
void parallel_for(std::int64_t n, int threads, Body&& body) {
    int nt = resolve_threads(threads);
#ifdef _OPENMP
    if (nt > 1) {
#pragma omp parallel for schedule(static) num_threads(nt)
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
#endif
    (void)nt;
    for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace qkd
