#pragma once
// Minimal data-parallel loop helper.  Work is split into fixed-size chunks so
// any reduction done per chunk and combined in chunk order gives bit-identical
// results for every thread count.

#include <cstdint>
#include <functional>

namespace kolmo {

// Thread count used by parallel_for; defaults to hardware concurrency and can
// be overridden with the KOLMO_THREADS environment variable.
int thread_count();

// Calls body(begin, end) over half-open sub-ranges that exactly cover
// [0, n).  Chunk boundaries depend only on n, never on the thread count.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& body);

inline constexpr int64_t kParallelChunk = 4096;

} // namespace kolmo
