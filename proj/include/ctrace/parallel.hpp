#pragma once

#include <cstddef>
#include <functional>

namespace ctrace {

/// Number of worker threads to use; 0 means one per hardware thread.
unsigned resolve_threads(unsigned requested);

/// Runs task(i) for every i in [0, count) on `threads` workers. Tasks must
/// write only to slots keyed by their index; the first exception thrown by any
/// task is rethrown on the calling thread after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task);

}  // namespace ctrace
