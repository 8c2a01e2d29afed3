#pragma once

#include <cstddef>
#include <functional>

namespace evreflex {

// Worker cap from EVREFLEX_THREADS (0 or unset = hardware concurrency).
unsigned worker_count();

// Runs body(i) for i in [0, n). Iterations must write disjoint state; the
// result is then independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace evreflex
