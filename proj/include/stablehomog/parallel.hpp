// parallel.hpp -- fixed-chunk thread pool with deterministic reductions.
//
// Determinism contract: chunk boundaries depend only on the item count and the
// fixed chunk size, never on the worker count. Reduction callers receive one
// slot per chunk and combine slots in index order, so results are bitwise
// reproducible for any STABLE_HOMOG_THREADS setting.
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace stablehomog {

// Worker cap: STABLE_HOMOG_THREADS if set (>=1), else hardware concurrency.
int worker_count();

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// Blocks until every chunk completed; rethrows the first captured exception.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

// Convenience: deterministic parallel map over indices with a default chunk.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn);

// Deterministic sum of fn(i) over [0, n): per-chunk partials summed in chunk
// order. fn must be pure.
double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& fn);

// Chunked dot product and squared norm over raw arrays (deterministic).
double det_dot(const double* a, const double* b, std::size_t n);
double det_sumsq(const double* a, std::size_t n);

}  // namespace stablehomog
