#pragma once

#include <cstddef>
#include <functional>

namespace nlos {

/// Worker count from NLOS_THREADS (0 or unset = hardware concurrency).
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads with static
/// contiguous chunks. Callers must write to disjoint outputs; results are then
/// independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Same partitioning as parallel_for, but hands each worker its whole
/// [begin, end) range so per-thread scratch (FFT plans) is built once.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace nlos
