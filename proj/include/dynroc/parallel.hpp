#pragma once

#include <cstddef>
#include <functional>

namespace dynroc {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Callers write
/// results by index, so the outcome never depends on scheduling. The first
/// exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// `requested` if nonzero, else DYNROC_THREADS, else hardware concurrency.
unsigned resolve_threads(unsigned requested);

}  // namespace dynroc
