#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace torsonet {

// Worker cap from TORSONET_THREADS; 0 or unset picks the hardware count.
int worker_count();

// Runs fn(i) for i in [0, n) across workers. Results must be written to
// per-index slots by the caller; combined with ordered reduction afterwards
// this keeps numeric results independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace torsonet
