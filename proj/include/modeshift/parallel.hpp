#pragma once

#include <cstddef>
#include <functional>

namespace modeshift {

// 0 means "use all hardware threads".
unsigned resolve_workers(unsigned requested);

// Runs body(i) for i in [0, count) on up to `workers` threads. The first
// exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace modeshift
