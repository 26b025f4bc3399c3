#include "mfl/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace mfl {

namespace {
int g_workers = 1;
}

void set_worker_count(int n) { g_workers = std::max(1, n); }
int worker_count() { return g_workers; }

void parallel_for_chunks(std::size_t n, std::size_t chunk,
                         const std::function<void(std::size_t, std::size_t)>& f) {
  if (n == 0) return;
  chunk = std::max<std::size_t>(1, chunk);
  const std::size_t nchunks = (n + chunk - 1) / chunk;
  const int workers = std::min<std::size_t>(g_workers, nchunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < nchunks; ++c)
      f(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      std::size_t c = next.fetch_add(1);
      if (c >= nchunks) return;
      f(c * chunk, std::min(n, (c + 1) * chunk));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f) {
  // Chunk size balances scheduling overhead against load balance.
  std::size_t chunk = std::max<std::size_t>(1, n / (8 * std::max(1, g_workers)));
  parallel_for_chunks(n, chunk, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) f(i);
  });
}

}  // namespace mfl
