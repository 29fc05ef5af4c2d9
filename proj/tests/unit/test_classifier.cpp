#include <doctest.h>

#include <cmath>
#include <sstream>

#include "quantbench/classifier.hpp"
#include "quantbench/dataset.hpp"
#include "quantbench/rng.hpp"
#include "test_helpers.hpp"

using namespace quantbench;
using quantbench::testing::doc;

namespace {

LabelledCollection binary_separable(std::size_t per_class) {
  Codeframe cf({"a", "b"});
  std::vector<SparseDocument> docs;
  std::vector<std::uint32_t> labels;
  Rng rng(2);
  for (std::uint32_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      docs.push_back(doc({{c, 1.0 + rng.next_double()}}));
      labels.push_back(c);
    }
  return LabelledCollection(std::move(docs), std::move(labels), cf);
}

LogisticModel zero_model(std::vector<double> bias) {
  const std::size_t k = bias.size();
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < k; ++i) labels.push_back("c" + std::to_string(i));
  return LogisticModel(std::vector<double>(2 * k, 0.0), std::move(bias), Codeframe(labels), 2,
                       1.0);
}

LabelledCollection random_collection(Rng& rng, std::size_t n, std::uint32_t n_features) {
  std::vector<SparseDocument> docs;
  std::vector<std::uint32_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<SparseDocument::Entry> entries;
    for (std::uint32_t f = 0; f < n_features; ++f)
      if (rng.next_below(3) == 0) entries.emplace_back(f, rng.next_double() * 2 - 1);
    docs.push_back(SparseDocument(std::move(entries)));
    labels.push_back(static_cast<std::uint32_t>(rng.next_below(3)));
  }
  // make sure at least two classes are present
  labels[0] = 0;
  if (n > 1) labels[1] = 1;
  return LabelledCollection(std::move(docs), std::move(labels), Codeframe::ternary_sentiment());
}

}  // namespace

TEST_CASE("separable data trains to perfect accuracy under weak regularization") {
  const auto data = binary_separable(20);
  const auto model = train_lr(data, 1e4, 0);
  const auto predictions = predict_hard(model, data.documents());
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(predictions[i] == data.label(i));
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(31);
  const auto data = random_collection(rng, 40, 6);
  const double C = 2.0;
  const auto model = train_lr(data, C, 0, LrConfig{60, 1e-5, 10});

  // pack the returned model back into the objective's parameter layout
  const LrObjective objective(data, C);
  std::vector<double> params(objective.dim(), 0.0);
  const std::size_t k = data.codeframe().size();
  for (std::uint32_t f = 0; f < data.feature_dimension(); ++f)
    for (std::size_t c = 0; c < k; ++c) params[f * k + c] = model.weight(c, f);
  for (std::size_t c = 0; c < k; ++c) params[data.feature_dimension() * k + c] = model.bias(c);

  std::vector<double> analytic(objective.dim());
  objective.gradient(params, analytic);

  const double h = 1e-5;
  for (std::size_t i = 0; i < objective.dim(); ++i) {
    std::vector<double> plus(params), minus(params);
    plus[i] += h;
    minus[i] -= h;
    const double numeric = (objective.loss(plus) - objective.loss(minus)) / (2 * h);
    const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic[i])});
    CHECK(std::abs(numeric - analytic[i]) / scale < 1e-4);
  }
}

TEST_CASE("strong regularization drives posteriors to the training prevalence") {
  const auto data = quantbench::testing::separable_collection(30);  // balanced thirds
  const auto model = train_lr(data, 1e-4, 0);
  const auto proba = predict_proba(model, data.documents());
  const auto prev = prevalence(data);
  for (std::size_t i = 0; i < proba.rows(); ++i)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(std::abs(proba.at(i, c) - prev[c]) < 0.05);
}

TEST_CASE("posterior formula special cases") {
  SUBCASE("zero weights and bias give uniform rows") {
    const auto model = zero_model({0.0, 0.0, 0.0});
    const std::vector<SparseDocument> docs{doc({{0, 3.0}}), doc({})};
    const auto proba = predict_proba(model, docs);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t c = 0; c < 3; ++c)
        CHECK(proba.at(i, c) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
  SUBCASE("bias (ln 2, 0, 0) on an empty document") {
    const auto model = zero_model({std::log(2.0), 0.0, 0.0});
    const std::vector<SparseDocument> docs{doc({})};
    const auto proba = predict_proba(model, docs);
    CHECK(proba.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(proba.at(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(proba.at(0, 2) == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("rows always sum to one") {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      const auto data = random_collection(rng, 10, 8);
      const auto model = train_lr(data, 0.5, 0, LrConfig{30, 1e-5, 10});
      const auto proba = predict_proba(model, data.documents());
      proba.validate();
    }
  }
}

TEST_CASE("hard predictions argmax with low-index tie break") {
  CHECK(argmax_class(std::vector<double>{0.2, 0.5, 0.3}) == 1);
  CHECK(argmax_class(std::vector<double>{0.4, 0.4, 0.2}) == 0);

  Rng rng(6);
  const auto data = random_collection(rng, 1000, 10);
  const auto model = train_lr(data, 1.0, 0, LrConfig{50, 1e-5, 10});
  const auto hard = predict_hard(model, data.documents());
  const auto proba = predict_proba(model, data.documents());
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(hard[i] == argmax_class(proba.row(i)));
}

TEST_CASE("the trainer reaches the convex optimum") {
  // independent route to the same minimum: plain gradient descent with a
  // small step, long horizon
  Rng rng(29);
  const auto data = random_collection(rng, 50, 8);
  const double C = 1.0;
  const auto model = train_lr(data, C, 0);

  const LrObjective objective(data, C);
  std::vector<double> x(objective.dim(), 0.0), g(objective.dim());
  for (int it = 0; it < 30000; ++it) {
    objective.gradient(x, g);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= 0.01 * g[i];
  }
  const double gd_loss = objective.loss(x);
  const double lbfgs_loss = model.loss_trace().back();
  // the quasi-Newton result must match (or beat) slow gradient descent
  CHECK(lbfgs_loss <= gd_loss + 1e-6 * std::abs(gd_loss));
  CHECK(std::abs(lbfgs_loss - gd_loss) / std::abs(gd_loss) < 1e-4);
}

TEST_CASE("training loss is non-increasing and deterministic") {
  Rng rng(8);
  for (int t = 0; t < 5; ++t) {
    const auto data = random_collection(rng, 60, 12);
    const auto model = train_lr(data, 1.0, 7);
    const auto& trace = model.loss_trace();
    REQUIRE(trace.size() >= 2);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);

    const auto again = train_lr(data, 1.0, 7);
    CHECK(model.raw_weights() == again.raw_weights());
    CHECK(model.raw_bias() == again.raw_bias());
  }
}

TEST_CASE("degenerate training set is rejected") {
  std::vector<SparseDocument> docs{doc({{0, 1.0}}), doc({{1, 1.0}})};
  const LabelledCollection data(std::move(docs), {1, 1}, Codeframe::ternary_sentiment());
  CHECK_THROWS_WITH_AS(train_lr(data, 1.0, 0), "degenerate training set", std::invalid_argument);
}

TEST_CASE("confusion rate columns") {
  SUBCASE("from_matrix validates column stochasticity") {
    CHECK_THROWS(ConfusionRates::from_matrix({0.5, 0.5, 0.4, 0.4}, 2));
    const auto ok = ConfusionRates::from_matrix({0.9, 0.2, 0.1, 0.8}, 2);
    CHECK(ok.at(0, 0) == doctest::Approx(0.9));
  }
  SUBCASE("zero columns fall back to identity") {
    const auto rates = ConfusionRates::column_normalized({2, 0, 1, 0}, 2);
    CHECK(rates.at(0, 0) == doctest::Approx(2.0 / 3));
    CHECK(rates.at(0, 1) == 0.0);
    CHECK(rates.at(1, 1) == 1.0);
  }
}

TEST_CASE("cross-validated confusion estimation") {
  SUBCASE("perfect classifier yields the identity in hard mode") {
    const auto data = quantbench::testing::separable_collection(25);
    const auto cv = cross_val_confusion(data, 1e4, 5, ConfusionMode::kHard, 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(cv.rates.at(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
  }

  SUBCASE("hard rates equal a brute-force recount of out-of-fold predictions") {
    Rng rng(9);
    const auto data = random_collection(rng, 90, 8);
    const auto cv = cross_val_confusion(data, 1.0, 3, ConfusionMode::kHard, 5,
                                        LrConfig{80, 1e-5, 10});
    const auto counts = data.label_counts();
    std::vector<double> recount(9, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i)
      recount[argmax_class(cv.posteriors.row(i)) * 3 + data.label(i)] += 1.0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(cv.rates.at(i, j) ==
              doctest::Approx(recount[i * 3 + j] / static_cast<double>(counts[j]))
                  .epsilon(1e-12));
  }

  SUBCASE("soft rates equal mean posterior mass per true class") {
    Rng rng(10);
    const auto data = random_collection(rng, 60, 8);
    const auto cv = cross_val_confusion(data, 1.0, 4, ConfusionMode::kSoft, 5,
                                        LrConfig{80, 1e-5, 10});
    const auto counts = data.label_counts();
    std::vector<double> recount(9, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t p = 0; p < 3; ++p)
        recount[p * 3 + data.label(i)] += cv.posteriors.at(i, p);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(cv.rates.at(i, j) ==
              doctest::Approx(recount[i * 3 + j] / static_cast<double>(counts[j]))
                  .epsilon(1e-12));
  }

  SUBCASE("columns sum to one in both modes") {
    Rng rng(12);
    const auto data = random_collection(rng, 70, 6);
    for (auto mode : {ConfusionMode::kHard, ConfusionMode::kSoft}) {
      const auto cv = cross_val_confusion(data, 1.0, 5, mode, 2, LrConfig{60, 1e-5, 10});
      for (std::size_t j = 0; j < 3; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < 3; ++i) col += cv.rates.at(i, j);
        CHECK(col == doctest::Approx(1.0).epsilon(1e-6));
      }
    }
  }

  SUBCASE("absent class is an error") {
    std::vector<SparseDocument> docs{doc({{0, 1.0}}), doc({{1, 1.0}}), doc({{0, 2.0}}),
                                     doc({{1, 2.0}})};
    const LabelledCollection data(std::move(docs), {0, 1, 0, 1},
                                  Codeframe::ternary_sentiment());
    CHECK_THROWS(cross_val_confusion(data, 1.0, 2, ConfusionMode::kHard, 1));
    // tolerated when requested; the missing class keeps an identity column
    const auto cv = cross_val_confusion(data, 1.0, 2, ConfusionMode::kHard, 1, LrConfig{},
                                        /*allow_absent_classes=*/true);
    CHECK(cv.rates.at(2, 2) == 1.0);
  }
}

TEST_CASE("model serialization round-trips") {
  const auto data = quantbench::testing::separable_collection(10);
  const auto model = train_lr(data, 3.0, 0, LrConfig{40, 1e-5, 10});
  std::stringstream ss;
  model.save(ss);
  const auto loaded = LogisticModel::load(ss);
  CHECK(loaded.raw_weights() == model.raw_weights());
  CHECK(loaded.raw_bias() == model.raw_bias());
  CHECK(loaded.C() == model.C());
  CHECK(loaded.codeframe() == model.codeframe());

  std::stringstream bad("not-a-model 9");
  CHECK_THROWS(LogisticModel::load(bad));
}
