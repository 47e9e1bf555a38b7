#pragma once

#include <cstddef>
#include <functional>

namespace pragsim {

/// Process-wide worker count used by the parallel loops in this library.
/// 0 selects std::thread::hardware_concurrency(). Default is 1.
void set_thread_count(std::size_t threads);
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Iterations must write only to their own
/// output slot; results are then independent of scheduling. The first
/// exception thrown by any iteration is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace pragsim
