#pragma once

#include <cstddef>
#include <functional>

namespace gsn {

// Worker cap from GSN_THREADS (0 or unset means hardware concurrency).
int thread_budget();

// Runs fn(0..n-1) across the thread budget. Results must be written to
// per-index slots; the first worker exception is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace gsn
