#include <benchmark/benchmark.h>

#include "quantbench/metrics.hpp"
#include "quantbench/rng.hpp"

using namespace quantbench;

static void BM_Ae(benchmark::State& state) {
  Rng rng(1);
  const PrevalenceVector p(random_simplex_point(rng, 3));
  const PrevalenceVector q(random_simplex_point(rng, 3));
  for (auto _ : state) benchmark::DoNotOptimize(ae(p, q));
}
BENCHMARK(BM_Ae);

static void BM_Rae(benchmark::State& state) {
  Rng rng(2);
  const PrevalenceVector p(random_simplex_point(rng, 3));
  const PrevalenceVector q(random_simplex_point(rng, 3));
  for (auto _ : state) benchmark::DoNotOptimize(rae(p, q, 100));
}
BENCHMARK(BM_Rae);

BENCHMARK_MAIN();
