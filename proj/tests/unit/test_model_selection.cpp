#include <doctest.h>

#include <cmath>

#include "quantbench/dataset.hpp"
#include "quantbench/metrics.hpp"
#include "quantbench/model_selection.hpp"
#include "test_helpers.hpp"

using namespace quantbench;

TEST_CASE("the C grid has exactly ten decades") {
  const auto grid = c_grid();
  REQUIRE(grid.size() == 10);
  CHECK(grid.front() == doctest::Approx(1e-4));
  CHECK(grid.back() == doctest::Approx(1e5));
  for (std::size_t i = 1; i < grid.size(); ++i)
    CHECK(grid[i] / grid[i - 1] == doctest::Approx(10.0));
}

TEST_CASE("zero-loss settings win and ties break toward the smaller C") {
  // Oracle-separable data: CC is exact for every C, so all scores are zero
  // and the smallest C must be selected.
  const auto bundle = synthesize_dataset(
      SyntheticSpec{Codeframe::ternary_sentiment(), 60, 240, 240, 240, 1.0, 7});
  const auto result =
      select_C(Method::kCC, bundle.train, bundle.validation, Loss::kAE,
               SamplingPlan{1, 60, 0, ReplacementPolicy::kAuto}, 11, enumerate_grid(3, 0.5));
  REQUIRE(result.scores.size() == 10);
  for (const auto& [C, score] : result.scores) CHECK(score == doctest::Approx(0.0));
  CHECK(result.best_C == doctest::Approx(1e-4));
}

TEST_CASE("selection is reproducible and stays on the grid") {
  const auto bundle = synthesize_dataset(
      SyntheticSpec{Codeframe::ternary_sentiment(), 60, 200, 150, 200, 0.7, 9});
  const SamplingPlan plan{2, 50, 0, ReplacementPolicy::kAuto};
  const auto grid = enumerate_grid(3, 0.5);
  const auto a = select_C(Method::kPCC, bundle.train, bundle.validation, Loss::kAE, plan, 3, grid);
  const auto b = select_C(Method::kPCC, bundle.train, bundle.validation, Loss::kAE, plan, 3, grid);
  CHECK(a.best_C == b.best_C);
  CHECK(a.scores == b.scores);
  const auto cs = c_grid();
  CHECK(std::find(cs.begin(), cs.end(), a.best_C) != cs.end());
}

TEST_CASE("parallel grid search merges to the serial result") {
  const auto bundle = synthesize_dataset(
      SyntheticSpec{Codeframe::ternary_sentiment(), 60, 180, 120, 180, 0.6, 15});
  const SamplingPlan plan{2, 50, 0, ReplacementPolicy::kAuto};
  const auto grid = enumerate_grid(3, 0.5);
  const auto serial = select_C(Method::kSLD, bundle.train, bundle.validation, Loss::kAE, plan,
                               5, grid, LrConfig{}, EnsembleParams{}, 1);
  const auto parallel = select_C(Method::kSLD, bundle.train, bundle.validation, Loss::kAE, plan,
                                 5, grid, LrConfig{}, EnsembleParams{}, 8);
  CHECK(serial.best_C == parallel.best_C);
  REQUIRE(serial.scores.size() == parallel.scores.size());
  for (std::size_t i = 0; i < serial.scores.size(); ++i) {
    CHECK(serial.scores[i].first == parallel.scores[i].first);
    CHECK(serial.scores[i].second == parallel.scores[i].second);
  }
}

TEST_CASE("evaluate_on_samples") {
  const auto bundle = synthesize_dataset(
      SyntheticSpec{Codeframe::ternary_sentiment(), 60, 150, 90, 300, 0.8, 13});

  SUBCASE("mlpe scores zero when samples match the training prevalence") {
    const auto mlpe = fit(Method::kMLPE, bundle.train, 1.0, 1);
    const auto prior = prevalence(bundle.train);  // balanced thirds by construction
    PrevalenceGrid grid{0.0, {prior}};
    const AppSamples samples(bundle.test, SamplingPlan{4, 90, 5, ReplacementPolicy::kAuto}, grid);
    CHECK(evaluate_on_samples(mlpe, bundle.test, samples, Loss::kAE) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("a single sample's mean is that sample's loss") {
    const auto cc = fit(Method::kCC, bundle.train, 1.0, 1);
    const AppSamples samples(bundle.test, SamplingPlan{1, 60, 5, ReplacementPolicy::kAuto},
                             PrevalenceGrid{0.0, {quantbench::testing::pv({0.6, 0.2, 0.2})}});
    const auto idx = samples.sample(0);
    const auto expected = ae(prevalence(bundle.test, idx),
                             cc.estimate(bundle.test.subset(idx).documents()));
    CHECK(evaluate_on_samples(cc, bundle.test, samples, Loss::kAE) ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("the mean over ten samples equals a hand-computed average") {
    const auto pcc = fit(Method::kPCC, bundle.train, 1.0, 1);
    const AppSamples samples(bundle.test, SamplingPlan{10, 50, 6, ReplacementPolicy::kAuto},
                             PrevalenceGrid{0.0, {quantbench::testing::pv({0.2, 0.3, 0.5})}});
    const auto cache = pcc.prepare(bundle.test.documents());
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto idx = samples.sample(i);
      total += rae(prevalence(bundle.test, idx), pcc.estimate(cache, idx), idx.size());
    }
    CHECK(evaluate_on_samples(pcc, bundle.test, samples, Loss::kRAE) ==
          doctest::Approx(total / 10.0).epsilon(1e-12));
  }
}
