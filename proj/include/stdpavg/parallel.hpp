#pragma once

#include <cstddef>
#include <functional>

namespace stdpavg {

// Worker count: SIM_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

// Runs body(i) for i in [0, n) on up to worker_count() threads. Each index is
// run exactly once; callers write results into per-index slots so the outcome
// does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace stdpavg
