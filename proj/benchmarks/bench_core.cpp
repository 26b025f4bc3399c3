#include <benchmark/benchmark.h>

#include "mfl/config_stats.hpp"
#include "mfl/dynamics.hpp"
#include "mfl/kernels.hpp"
#include "mfl/rng.hpp"
#include "mfl/transport.hpp"

using namespace mfl;

namespace {

ParticleConfig random_config(int dim, std::size_t n, std::uint64_t seed) {
  ParticleConfig c;
  c.dim = dim;
  c.n = n;
  c.positions.resize(n * dim);
  auto rng = make_rng(seed);
  for (auto& x : c.positions) x = uniform01(rng);
  return c;
}

void BM_rhs_power_law(benchmark::State& state) {
  ParticleConfig c = random_config(2, state.range(0), 1);
  KernelSpec k = power_law(2, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(rhs(c, k));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_rhs_power_law)->Range(256, 16384)->Complexity(benchmark::oNSquared);

void BM_rhs_mollified(benchmark::State& state) {
  ParticleConfig c = random_config(2, state.range(0), 2);
  KernelSpec k = mollify(power_law(2, 0.3), 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(rhs(c, k));
}
BENCHMARK(BM_rhs_mollified)->Range(1024, 32768);

void BM_cutoff_sum(benchmark::State& state) {
  ParticleConfig c = random_config(2, state.range(0), 3);
  for (auto _ : state) benchmark::DoNotOptimize(cutoff_sum(c, 1.3, 0.01));
}
BENCHMARK(BM_cutoff_sum)->Range(256, 8192);

void BM_neighbor_index(benchmark::State& state) {
  ParticleConfig c = random_config(2, state.range(0), 4);
  double radius = std::pow(static_cast<double>(state.range(0)), -0.5);
  for (auto _ : state) benchmark::DoNotOptimize(neighbor_index(c, radius));
}
BENCHMARK(BM_neighbor_index)->Range(1024, 65536);

void BM_assignment(benchmark::State& state) {
  const std::size_t n = state.range(0);
  ParticleConfig a = random_config(2, n, 5);
  ParticleConfig b = random_config(2, n, 6);
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double dx = a.positions[2 * i] - b.positions[2 * j];
      double dy = a.positions[2 * i + 1] - b.positions[2 * j + 1];
      cost[i * n + j] = dx * dx + dy * dy;
    }
  std::vector<int> rowsol;
  for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(n, cost, rowsol));
}
BENCHMARK(BM_assignment)->Range(128, 4096);

}  // namespace

BENCHMARK_MAIN();
