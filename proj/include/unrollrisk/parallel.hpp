#pragma once

#include <cstddef>
#include <functional>

namespace unrollrisk {

// threads == 0 means hardware concurrency.
unsigned resolve_threads(unsigned threads);

// Runs body(i) for i in [0, count) on a pool of worker threads pulling indices
// from a shared counter. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace unrollrisk
