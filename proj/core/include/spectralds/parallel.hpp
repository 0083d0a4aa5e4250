#pragma once

#include <cstddef>
#include <functional>

namespace spectralds {

// Worker count: explicit override, else SPECTRALDS_THREADS, else hardware.
std::size_t thread_count();
void set_thread_count(std::size_t threads); // 0 restores automatic selection
std::size_t thread_override();              // 0 when no override is set

// Runs body(i) for i in [0, count). Each index must write only its own outputs,
// which keeps results independent of the number of workers.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace spectralds
