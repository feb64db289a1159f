#pragma once

#include <cstddef>
#include <functional>

namespace kernelflow {

/// Worker count: KERNELFLOW_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

/// Overrides the worker count for the current process (0 restores the default).
void set_worker_count(unsigned n);

/// Runs body(i) for i in [0, n) split into contiguous blocks across workers.
/// Exceptions thrown by any block are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace kernelflow
