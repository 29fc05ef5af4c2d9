#include <benchmark/benchmark.h>

#include "quantbench/dataset.hpp"
#include "quantbench/protocol.hpp"
#include "quantbench/quantifier.hpp"

using namespace quantbench;

namespace {

struct Fixture {
  DatasetBundle bundle;
  std::vector<Quantifier> quantifiers;
  PoolCache caches[5];
  SampleIndices sample;

  Fixture()
      : bundle(synthesize_dataset(
            SyntheticSpec{Codeframe::ternary_sentiment(), 60, 600, 300, 2000, 0.8, 3})) {
    int i = 0;
    for (Method m : {Method::kCC, Method::kPCC, Method::kPACC, Method::kSLD, Method::kHDy}) {
      quantifiers.push_back(fit(m, bundle.train, 1.0, 9));
      caches[i++] = quantifiers.back().prepare(bundle.test.documents());
    }
    sample = draw_sample(bundle.test, PrevalenceVector({0.25, 0.5, 0.25}), 100,
                         ReplacementPolicy::kAuto, 2);
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void bench_estimate(benchmark::State& state, std::size_t method_index) {
  auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        f.quantifiers[method_index].estimate(f.caches[method_index], f.sample));
}

}  // namespace

static void BM_EstimateCc(benchmark::State& state) { bench_estimate(state, 0); }
static void BM_EstimatePcc(benchmark::State& state) { bench_estimate(state, 1); }
static void BM_EstimatePacc(benchmark::State& state) { bench_estimate(state, 2); }
static void BM_EstimateSld(benchmark::State& state) { bench_estimate(state, 3); }
static void BM_EstimateHdy(benchmark::State& state) { bench_estimate(state, 4); }
BENCHMARK(BM_EstimateCc);
BENCHMARK(BM_EstimatePcc);
BENCHMARK(BM_EstimatePacc);
BENCHMARK(BM_EstimateSld);
BENCHMARK(BM_EstimateHdy);

static void BM_TrainLr(benchmark::State& state) {
  auto& f = fixture();
  for (auto _ : state) {
    auto model = train_lr(f.bundle.train, 1.0, 0);
    benchmark::DoNotOptimize(model);
  }
}
BENCHMARK(BM_TrainLr)->Unit(benchmark::kMillisecond);
