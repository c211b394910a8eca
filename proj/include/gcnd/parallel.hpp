#pragma once

#include <cstddef>
#include <functional>

namespace gcnd {

/// Process-wide worker cap; 0 means hardware concurrency.
void set_thread_count(unsigned count);
unsigned thread_count();

/// Runs body(i) for i in [0, n) over contiguous chunks. Bodies must write disjoint outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace gcnd
