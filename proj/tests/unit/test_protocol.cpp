#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "quantbench/metrics.hpp"
#include "quantbench/protocol.hpp"
#include "quantbench/rng.hpp"
#include "test_helpers.hpp"

using namespace quantbench;
using quantbench::testing::pv;

TEST_CASE("grid counts match the closed form") {
  CHECK(enumerate_grid(3, 0.05).size() == 231);
  CHECK(enumerate_grid(2, 0.05).size() == 21);
  // |P|(|P|+1)/2 with |P| = 1/step + 1
  for (double step : {0.5, 0.25, 0.1, 0.05}) {
    const std::size_t p = static_cast<std::size_t>(std::lround(1.0 / step)) + 1;
    CHECK(enumerate_grid(3, step).size() == p * (p + 1) / 2);
  }
  CHECK_THROWS(enumerate_grid(3, 0.3));
}

TEST_CASE("grid enumeration order and exactness") {
  const auto grid = enumerate_grid(3, 0.5);
  REQUIRE(grid.size() == 6);
  const double expected[6][3] = {{1, 0, 0},   {0.5, 0.5, 0}, {0.5, 0, 0.5},
                                 {0, 1, 0},   {0, 0.5, 0.5}, {0, 0, 1}};
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(grid.points[i][c] == doctest::Approx(expected[i][c]).epsilon(1e-12));

  // every coordinate is an exact multiple of step and rows sum to one
  for (const auto& point : enumerate_grid(3, 0.05).points) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double ratio = point[c] / 0.05;
      CHECK(std::abs(ratio - std::lround(ratio)) < 1e-9);
      sum += point[c];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("allocate_counts largest remainder") {
  CHECK(allocate_counts(pv({0.5, 0.3, 0.2}), 100) == std::vector<std::size_t>{50, 30, 20});
  CHECK(allocate_counts(pv({1.0 / 3, 1.0 / 3, 1.0 / 3}), 100) ==
        std::vector<std::size_t>{34, 33, 33});

  Rng rng(3);
  for (int t = 0; t < 10000; ++t) {
    const auto target = PrevalenceVector(random_simplex_point(rng, 2 + rng.next_below(4)));
    const std::size_t q = 1 + rng.next_below(500);
    const auto counts = allocate_counts(target, q);
    std::size_t total = 0;
    for (auto c : counts) total += c;
    CHECK(total == q);
  }
}

TEST_CASE("allocate_counts minimizes L1 distance among integer allocations") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto target = PrevalenceVector(random_simplex_point(rng, 3));
    const std::size_t q = 1 + rng.next_below(12);
    const auto counts = allocate_counts(target, q);
    double chosen = 0.0;
    for (std::size_t c = 0; c < 3; ++c)
      chosen += std::abs(static_cast<double>(counts[c]) / q - target[c]);
    // brute force over all allocations of q into 3 parts
    double best = 1e9;
    for (std::size_t a = 0; a <= q; ++a)
      for (std::size_t b = 0; a + b <= q; ++b) {
        const std::size_t c = q - a - b;
        const double d = std::abs(static_cast<double>(a) / q - target[0]) +
                         std::abs(static_cast<double>(b) / q - target[1]) +
                         std::abs(static_cast<double>(c) / q - target[2]);
        best = std::min(best, d);
      }
    CHECK(chosen == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("draw_sample respects exact class counts") {
  const auto pool = quantbench::testing::separable_collection(120);  // 120 per class

  SUBCASE("degenerate target draws distinct indices of one class") {
    const auto s = draw_sample(pool, pv({0, 0, 1}), 100, ReplacementPolicy::kNever, 9);
    CHECK(s.size() == 100);
    std::set<std::uint32_t> uniq(s.indices.begin(), s.indices.end());
    CHECK(uniq.size() == 100);
    for (auto i : s.indices) CHECK(pool.label(i) == 2);
  }

  SUBCASE("realized prevalence equals counts/q exactly") {
    Rng rng(13);
    for (int t = 0; t < 30; ++t) {
      const auto target = PrevalenceVector(random_simplex_point(rng, 3));
      const auto s = draw_sample(pool, target, 60, ReplacementPolicy::kAuto, t);
      const auto counts = allocate_counts(target, 60);
      const auto realized = prevalence(pool, s);
      for (std::size_t c = 0; c < 3; ++c)
        CHECK(realized[c] == doctest::Approx(static_cast<double>(counts[c]) / 60).epsilon(1e-12));
    }
  }

  SUBCASE("fixed seed reproduces indices") {
    const auto a = draw_sample(pool, pv({0.2, 0.5, 0.3}), 50, ReplacementPolicy::kAuto, 77);
    const auto b = draw_sample(pool, pv({0.2, 0.5, 0.3}), 50, ReplacementPolicy::kAuto, 77);
    CHECK(a.indices == b.indices);
  }

  SUBCASE("policy=never errors naming the class") {
    CHECK_THROWS_WITH_AS(
        draw_sample(pool, pv({1, 0, 0}), 200, ReplacementPolicy::kNever, 1),
        "class 'positive' pool too small for sampling without replacement", std::runtime_error);
  }

  SUBCASE("auto falls back to replacement for scarce classes") {
    const auto s = draw_sample(pool, pv({1, 0, 0}), 200, ReplacementPolicy::kAuto, 1);
    CHECK(s.size() == 200);
    for (auto i : s.indices) CHECK(pool.label(i) == 0);
  }
}

TEST_CASE("app sample stream") {
  const auto pool = quantbench::testing::separable_collection(120);

  SUBCASE("5775 samples at m=25, step 0.05") {
    const AppSamples samples(pool, SamplingPlan{25, 100, 42, ReplacementPolicy::kAuto},
                             enumerate_grid(3, 0.05));
    CHECK(samples.size() == 5775);
  }

  SUBCASE("m=1 over a 6-point grid realizes the targets exactly") {
    const AppSamples samples(pool, SamplingPlan{1, 100, 42, ReplacementPolicy::kAuto},
                             enumerate_grid(3, 0.5));
    REQUIRE(samples.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      const auto realized = prevalence(pool, samples.sample(i));
      for (std::size_t c = 0; c < 3; ++c)
        CHECK(realized[c] == doctest::Approx(samples.target(i)[c]).epsilon(1e-12));
    }
  }

  SUBCASE("within-class draws never repeat without replacement") {
    const AppSamples samples(pool, SamplingPlan{2, 90, 7, ReplacementPolicy::kNever},
                             enumerate_grid(3, 0.5));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto s = samples.sample(i);
      std::set<std::uint32_t> seen(s.indices.begin(), s.indices.end());
      CHECK(seen.size() == s.indices.size());
    }
  }

  SUBCASE("shift spans the full range up to the analytic bound") {
    const auto pool_prev = prevalence(pool);
    const AppSamples samples(pool, SamplingPlan{1, 100, 3, ReplacementPolicy::kAuto},
                             enumerate_grid(3, 0.05));
    double max_shift = 0.0, min_shift = 1.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double s = shift(pool_prev, prevalence(pool, samples.sample(i)));
      max_shift = std::max(max_shift, s);
      min_shift = std::min(min_shift, s);
    }
    // the balanced pool admits shifts up to 2*(1 - 1/3)/3 at the corners;
    // the closest step-0.05 grid point to (1/3, 1/3, 1/3) sits at 0.0222
    CHECK(max_shift == doctest::Approx(ae_upper_bound(pool_prev)).epsilon(1e-9));
    CHECK(min_shift == doctest::Approx(2.0 / 90).epsilon(1e-9));
  }

  SUBCASE("samples regenerate deterministically in isolation") {
    const AppSamples samples(pool, SamplingPlan{3, 50, 11, ReplacementPolicy::kAuto},
                             enumerate_grid(3, 0.25));
    const auto once = samples.sample(17);
    const auto again = samples.sample(17);
    CHECK(once.indices == again.indices);
  }
}

TEST_CASE("samples export one line per sample") {
  const auto pool = quantbench::testing::separable_collection(40);
  const AppSamples samples(pool, SamplingPlan{2, 30, 5, ReplacementPolicy::kAuto},
                           enumerate_grid(3, 0.5));
  std::ostringstream out;
  export_samples(out, samples);
  std::istringstream in(out.str());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::size_t grid_id = 0, replicate = 0;
    fields >> grid_id >> replicate;
    CHECK(grid_id == samples.grid_point(lines));
    CHECK(replicate == samples.replicate(lines));
    std::vector<std::uint32_t> indices;
    std::uint32_t idx = 0;
    while (fields >> idx) indices.push_back(idx);
    CHECK(indices == samples.sample(lines).indices);
    ++lines;
  }
  CHECK(lines == samples.size());
}

TEST_CASE("npp sample is the whole pool") {
  const auto pool = quantbench::testing::separable_collection(5);
  const auto [prev, idx] = npp_sample(pool);
  REQUIRE(idx.size() == pool.size());
  for (std::uint32_t i = 0; i < idx.size(); ++i) CHECK(idx.indices[i] == i);
  const auto direct = prevalence(pool);
  for (std::size_t c = 0; c < 3; ++c) CHECK(prev[c] == direct[c]);
}
