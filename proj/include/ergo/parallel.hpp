#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace ergo {

/// Worker count: ERGO_SFDE_WORKERS if set (>= 1), else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on a static partition across workers.
/// Results must be written into per-index slots; callers aggregate in
/// ascending index afterwards so sums do not depend on the worker count.
/// If several indices throw, the exception of the lowest index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ergo
