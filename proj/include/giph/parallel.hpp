#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace giph {

enum class Execution { Serial, Parallel };

inline int worker_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Runs f(i) for i in [0, n). Parallel execution uses a dynamic OpenMP
/// schedule; callers must write results to disjoint slots.
template <class F>
void parallel_for(std::size_t n, Execution mode, F&& f) {
    if (mode == Execution::Serial || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
}

} // namespace giph
