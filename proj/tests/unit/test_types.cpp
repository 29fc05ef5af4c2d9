#include <doctest.h>

#include <algorithm>

#include "quantbench/rng.hpp"
#include "quantbench/types.hpp"
#include "test_helpers.hpp"

using namespace quantbench;
using quantbench::testing::doc;

namespace {

LabelledCollection collection_from_labels(std::vector<std::uint32_t> labels) {
  std::vector<SparseDocument> docs(labels.size());
  return LabelledCollection(std::move(docs), std::move(labels), Codeframe::ternary_sentiment());
}

}  // namespace

TEST_CASE("codeframe rejects duplicates and tiny frames") {
  CHECK_THROWS(Codeframe({"a"}));
  CHECK_THROWS(Codeframe({"a", "a"}));
  const Codeframe cf({"a", "b", "c"});
  CHECK(cf.index_of("b") == 1);
  CHECK(cf.index_of("z") == -1);
}

TEST_CASE("sparse document invariants") {
  CHECK_THROWS(doc({{1, 1.0}, {1, 2.0}}));  // duplicate index
  CHECK_THROWS(doc({{2, 1.0}, {1, 2.0}}));  // unsorted
  CHECK_THROWS(doc({{0, 0.0}}));            // explicit zero
  const SparseDocument d = SparseDocument::from_unsorted({{3, 1.0}, {1, 2.0}, {3, -1.0}});
  CHECK(d.nnz() == 1);  // the two f=3 entries cancel
  CHECK(d.entries()[0].first == 1);
}

TEST_CASE("prevalence vector normalization rules") {
  // within 1e-6: renormalized
  const PrevalenceVector p({0.5, 0.5 + 5e-7});
  CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
  // beyond 1e-6: error
  CHECK_THROWS(PrevalenceVector({0.5, 0.51}));
  CHECK_THROWS(PrevalenceVector({-0.1, 1.1}));
  CHECK_THROWS(PrevalenceVector(std::vector<double>{}));
}

TEST_CASE("prevalence counts labels") {
  // labels [pos, pos, neu, neg] -> (0.5, 0.25, 0.25)
  const auto p = prevalence(collection_from_labels({0, 0, 1, 2}));
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.25));
  CHECK(p[2] == doctest::Approx(0.25));

  // degenerate one-class sample
  const auto q = prevalence(collection_from_labels({1, 1, 1}));
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 1.0);
  CHECK(q[2] == 0.0);
}

TEST_CASE("prevalence errors on empty sample") {
  std::vector<SparseDocument> docs;
  const LabelledCollection empty(std::move(docs), {}, Codeframe::ternary_sentiment());
  CHECK_THROWS_WITH_AS(prevalence(empty), "empty sample", std::invalid_argument);
}

TEST_CASE("uniform prevalence") {
  const Codeframe two({"a", "b"});
  const Codeframe four({"a", "b", "c", "d"});
  CHECK(uniform_prevalence(Codeframe::ternary_sentiment())[0] == doctest::Approx(1.0 / 3));
  CHECK(uniform_prevalence(two)[0] == doctest::Approx(0.5));
  CHECK(uniform_prevalence(four)[3] == doctest::Approx(0.25));
}

TEST_CASE("prevalence is a valid distribution and permutation-invariant") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint32_t> labels;
    const std::size_t n = 1 + rng.next_below(200);
    for (std::size_t i = 0; i < n; ++i)
      labels.push_back(static_cast<std::uint32_t>(rng.next_below(3)));
    const auto p = prevalence(collection_from_labels(labels));
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p[i] >= 0.0);
      sum += p[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

    shuffle(labels, rng);
    const auto q = prevalence(collection_from_labels(labels));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(q[i]));
  }
}

TEST_CASE("indexed prevalence equals direct label counting") {
  Rng rng(7);
  const auto pool = collection_from_labels({0, 1, 2, 0, 1, 2, 1, 1, 2, 0});
  for (int trial = 0; trial < 20; ++trial) {
    SampleIndices idx;
    const std::size_t n = 1 + rng.next_below(30);
    for (std::size_t i = 0; i < n; ++i)
      idx.indices.push_back(static_cast<std::uint32_t>(rng.next_below(pool.size())));
    const auto p = prevalence(pool, idx);
    std::vector<double> direct(3, 0.0);
    for (auto i : idx.indices) direct[pool.label(i)] += 1.0 / static_cast<double>(n);
    for (std::size_t c = 0; c < 3; ++c) CHECK(p[c] == doctest::Approx(direct[c]).epsilon(1e-12));
  }
}

TEST_CASE("subset materializes samples and concat merges") {
  const auto pool = quantbench::testing::separable_collection(4);
  SampleIndices idx{{0, 4, 4, 11}};
  const auto sub = pool.subset(idx);
  CHECK(sub.size() == 4);
  CHECK(sub.label(1) == pool.label(4));
  CHECK(sub.document(2) == pool.document(4));

  const auto merged = LabelledCollection::concat(pool, sub);
  CHECK(merged.size() == pool.size() + 4);
  CHECK(merged.label(pool.size()) == sub.label(0));

  SampleIndices bad{{999}};
  CHECK_THROWS(pool.subset(bad));
}
