#pragma once

#include <cstdint>

namespace rppg {

// Static-partition parallel loop. Every iteration writes a disjoint slice of
// the output and runs its own reductions sequentially, so results are
// bitwise-identical regardless of thread count.
template <class F>
void parallel_for(int64_t n, F&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < n; ++i) fn(i);
}

}  // namespace rppg
