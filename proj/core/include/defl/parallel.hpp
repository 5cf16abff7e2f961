#pragma once

#include <cstddef>
#include <functional>

namespace defl {

/// Worker count: DEFL_THREADS if set and positive, otherwise the hardware
/// concurrency (DEFL_THREADS=0 also means auto).
unsigned thread_count();

/// Runs fn(i) for i in [0, n), partitioned into contiguous chunks across
/// workers. fn must not touch shared mutable state except through disjoint
/// per-index slots; results are therefore independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace defl
