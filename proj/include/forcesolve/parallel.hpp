#pragma once

#include <cstddef>
#include <functional>

namespace forcesolve {

// Upper bound on worker threads: FORCESOLVE_THREADS if set to a positive
// integer, otherwise the hardware concurrency.
std::size_t thread_budget();

// Runs body(i) for i in [0, n). Each index is written by exactly one worker, so
// results stored by index are assembled in a fixed order. The first exception
// (lowest index) is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace forcesolve
