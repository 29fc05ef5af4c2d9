#include <benchmark/benchmark.h>

#include "quantbench/dataset.hpp"
#include "quantbench/protocol.hpp"

using namespace quantbench;

namespace {

const LabelledCollection& pool_4k() {
  static const DatasetBundle bundle = synthesize_dataset(
      SyntheticSpec{Codeframe::ternary_sentiment(), 60, 300, 150, 4000, 0.8, 11});
  return bundle.test;
}

}  // namespace

static void BM_EnumerateGrid(benchmark::State& state) {
  for (auto _ : state) {
    auto grid = enumerate_grid(3, 0.05);
    benchmark::DoNotOptimize(grid);
  }
}
BENCHMARK(BM_EnumerateGrid);

static void BM_DrawSample(benchmark::State& state) {
  const auto& pool = pool_4k();
  const PrevalenceVector target({0.3, 0.45, 0.25});
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto sample = draw_sample(pool, target, static_cast<std::size_t>(state.range(0)),
                              ReplacementPolicy::kAuto, seed++);
    benchmark::DoNotOptimize(sample);
  }
}
BENCHMARK(BM_DrawSample)->Arg(100)->Arg(1000);

// The full evaluation stream: 231 grid points x 25 replicates of 100 docs.
static void BM_FullAppStream(benchmark::State& state) {
  const auto& pool = pool_4k();
  const auto grid = enumerate_grid(3, 0.05);
  for (auto _ : state) {
    const AppSamples samples(pool, SamplingPlan{25, 100, 17, ReplacementPolicy::kAuto}, grid);
    std::size_t total = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) total += samples.sample(i).size();
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(BM_FullAppStream)->Unit(benchmark::kMillisecond);
