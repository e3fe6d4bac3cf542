#pragma once

#include <cstddef>
#include <functional>

namespace spline_koopman {

/// Worker count: hardware concurrency, capped by SPLINE_KOOPMAN_THREADS.
int worker_count();

/// Calls body(i) for every i in [0, count), fanning out across worker threads.
///
/// Results must be written to per-index slots; ordering of side effects
/// across indices is unspecified. If any call throws, the exception of the
/// lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace spline_koopman
