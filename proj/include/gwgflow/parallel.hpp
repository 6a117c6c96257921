#pragma once

#include <cstddef>
#include <functional>

namespace gwg {

// Worker count used by parallel_for. Resolved once from GWGFLOW_THREADS
// (default 1); can be overridden programmatically before first use.
int thread_count();
void set_thread_count(int n);

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// Chunk boundaries depend only on n, never on the worker count, and every
// chunk writes to its own outputs, so results are bit-stable for any worker
// count. Reductions over chunk outputs must be done by the caller in chunk
// order.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

// Element-wise convenience over [0, n): fn(i).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

inline constexpr std::size_t kDefaultChunk = 64;

} // namespace gwg
