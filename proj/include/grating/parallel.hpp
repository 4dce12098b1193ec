#pragma once

#include <cstddef>
#include <functional>

namespace grating {

int default_workers();

// Runs fn(i) for i in [0, n) on a fixed-size pool.  Callers own the output
// slots (one per index), so the merge is deterministic regardless of
// scheduling.  workers <= 0 selects the hardware concurrency; the first
// exception thrown by any task is rethrown after the pool drains.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace grating
