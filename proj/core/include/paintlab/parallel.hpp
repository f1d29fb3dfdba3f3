#pragma once

#include <cstddef>
#include <functional>

namespace paintlab {

/// Worker count for pixel/channel parallel loops: LAB_THREADS if set, else the
/// hardware concurrency.
std::size_t worker_count();

/// Splits [0, n) into contiguous chunks and runs `body(begin, end)` on each.
/// Chunks write disjoint outputs, so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace paintlab
