#pragma once

#include <cstddef>
#include <functional>

namespace mfl {

// Global worker count used by parallel_for. Defaults to 1; the CLI sets it
// from --threads. All parallel loops in this project are element-independent
// (each index writes only its own slot), so results are bitwise identical
// for any worker count.
void set_worker_count(int n);
int worker_count();

// Runs f(i) for i in [0, n). With worker_count() == 1 this is a plain loop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

// Runs f(begin, end) over fixed-size chunks of [0, n). Chunk boundaries are
// independent of the worker count.
void parallel_for_chunks(std::size_t n, std::size_t chunk,
                         const std::function<void(std::size_t, std::size_t)>& f);

}  // namespace mfl
