#pragma once

#include <cstddef>
#include <functional>

namespace jdsr {

/// Caps worker threads for parallel_for; n <= 0 selects the hardware count.
void set_thread_count(int n);
int thread_count();

/// Splits [0, n) into contiguous chunks, one per worker. Callers must write
/// disjoint outputs so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace jdsr
