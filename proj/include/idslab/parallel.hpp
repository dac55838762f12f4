#pragma once

#include <functional>

namespace idslab {

// Number of worker threads used when a caller passes workers == 0.
int default_workers();

// Runs f(i) for i in [0, n) on a static partition of contiguous blocks.
// Callers must write results into per-index storage; reductions are then done
// sequentially by the caller, so results are identical for any worker count.
// The first exception thrown by any worker is rethrown after all join.
void parallel_for(long n, int workers, const std::function<void(long)>& f);

}  // namespace idslab
