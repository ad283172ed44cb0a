#pragma once

#include <cstddef>
#include <functional>

namespace branchsim {

// Worker count from BRANCHSIM_THREADS, clamped to [1, hardware]. 0 = unset.
int configured_workers(int cap = 0);

// Index-partitioned parallel map. Each index is processed exactly once by a
// fixed worker; per-index work must not touch shared mutable state, which
// keeps results independent of the schedule.
void parallel_for_indices(std::size_t n, const std::function<void(std::size_t)>& body,
                          int max_workers = 0);

}  // namespace branchsim
