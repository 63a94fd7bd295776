#ifndef DRC_WORKER_POOL_HPP
#define DRC_WORKER_POOL_HPP

#include <functional>

namespace drc {

// Worker count for parallel scans: the DRC_SIM_WORKERS environment variable
// when set to a positive integer, otherwise the hardware concurrency.
int default_worker_count();

// Runs fn(0..n-1) across `workers` threads (0 = default_worker_count()).
// Results must be written to per-index slots by the callable, which keeps the
// output deterministic regardless of scheduling.  The first exception thrown
// by any task is rethrown after all threads have joined.
void parallel_for(int n, const std::function<void(int)>& fn, int workers = 0);

}  // namespace drc

#endif
