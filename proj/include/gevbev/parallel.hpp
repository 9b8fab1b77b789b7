#pragma once

#include <cstddef>
#include <functional>

namespace gevbev {

/// Worker cap from GEVBEV_THREADS, else the hardware concurrency (at least 1).
unsigned worker_count();

/// Runs fn(i) for i in [0, n) over contiguous chunks on up to worker_count() threads.
/// fn must only write state owned by index i; results are then independent of the
/// thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace gevbev
