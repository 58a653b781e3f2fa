#pragma once

#include <cstddef>
#include <functional>

namespace funcause {

/// Worker count: FUNCAUSE_THREADS when set and positive, else hardware concurrency.
std::size_t worker_count();

/// Overrides the worker count for this process (0 restores the default).
void set_worker_count(std::size_t n);

/**
 * Runs body(i) for i in [0, n). Each index is visited exactly once; callers
 * write results into per-index slots so output order never depends on
 * scheduling. The first exception thrown by any body is rethrown.
 */
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace funcause
