#pragma once

#include <cstddef>
#include <functional>

namespace lqswitch {

/// Worker count resolution: explicit request > 0 wins, then the
/// LQSWITCH_THREADS environment variable, then hardware concurrency.
unsigned resolve_thread_count(unsigned requested = 0);

/// Runs fn(i) for i in [0, n). Callers must write results into disjoint
/// per-index slots; reductions happen after the join, so the outcome is
/// identical for every thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

} // namespace lqswitch
