#pragma once

#include <cstddef>
#include <functional>

namespace hsicd {

// Worker cap: FFCAE_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t worker_count();

// Splits [0, count) into contiguous blocks and runs `body(begin, end)` on each,
// one block per worker. Callers must write disjoint outputs per index so the
// result does not depend on the partition.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace hsicd
