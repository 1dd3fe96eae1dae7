#pragma once

#include <cstddef>
#include <functional>

namespace ommap {

/// Worker count: explicit value if > 0, else OMMAP_THREADS, else 1.
int resolve_threads(int requested = 0);

/// Process-wide default used by the library when an options struct leaves threads at 0.
void set_default_threads(int threads);
int default_threads();

/// Runs task(i) for i in [0, n) on a bounded pool. Tasks write results by index,
/// so output never depends on the thread count. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task, int threads = 0);

}  // namespace ommap
