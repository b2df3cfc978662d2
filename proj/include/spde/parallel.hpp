#pragma once

#include <cstdint>
#include <functional>

namespace spde {

/// Caps the worker threads used by chunked loops (0 = hardware concurrency).
void set_worker_cap(int n);
int worker_cap();

/// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
/// Chunk boundaries never depend on the worker count, so callers that merge
/// per-chunk partial results in chunk order get identical output no matter
/// how many threads run.
void parallel_chunks(
    std::int64_t n, std::int64_t chunk,
    const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn);

}  // namespace spde
