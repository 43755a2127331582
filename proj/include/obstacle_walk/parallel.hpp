#pragma once

#include <cstddef>
#include <functional>

namespace obstacle_walk {

/// Worker cap for intra-operation parallelism. Defaults to the
/// OBSTACLE_WALK_THREADS environment variable, else 1. Results never depend
/// on this value: every parallel loop writes disjoint outputs and reductions
/// are performed in a fixed order afterwards.
int thread_count();
void set_thread_count(int n);

/// Runs fn(begin, end) over contiguous chunks of [0, n). Chunk boundaries
/// depend only on n and `min_chunk`, never on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t min_chunk = 4096);

}  // namespace obstacle_walk
