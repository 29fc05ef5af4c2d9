#include "quantbench/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "quantbench/rng.hpp"

namespace quantbench {

PrevalenceGrid enumerate_grid(std::size_t n_classes, double step) {
  if (n_classes < 2) throw std::invalid_argument("grid needs at least 2 classes");
  const double levels_real = 1.0 / step;
  const long levels = std::lround(levels_real);
  if (levels < 1 || std::abs(levels_real - static_cast<double>(levels)) > 1e-9)
    throw std::invalid_argument("1/step must be an integer");

  PrevalenceGrid grid;
  grid.step = step;
  std::vector<long> counts(n_classes, 0);

  // Descending lexicographic enumeration of integer compositions of `levels`.
  auto emit = [&]() {
    std::vector<double> values(n_classes);
    for (std::size_t i = 0; i < n_classes; ++i)
      values[i] = static_cast<double>(counts[i]) / static_cast<double>(levels);
    grid.points.emplace_back(std::move(values));
  };
  auto recurse = [&](auto&& self, std::size_t pos, long remaining) -> void {
    if (pos == n_classes - 1) {
      counts[pos] = remaining;
      emit();
      return;
    }
    for (long c = remaining; c >= 0; --c) {
      counts[pos] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  recurse(recurse, 0, levels);
  return grid;
}

std::vector<std::size_t> allocate_counts(const PrevalenceVector& target, std::size_t q) {
  if (q < 1) throw std::invalid_argument("sample size must be >= 1");
  const std::size_t k = target.size();
  std::vector<std::size_t> counts(k);
  std::vector<std::pair<double, std::size_t>> remainders(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = target[i] * static_cast<double>(q);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainders[i] = {exact - std::floor(exact), i};
    assigned += counts[i];
  }
  // Largest remainder first; ties toward the lower class index.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < q; ++r, ++assigned) ++counts[remainders[r % k].second];
  return counts;
}

namespace {

// Draws `count` documents of one class from `pool_indices`.
void draw_class(std::vector<std::uint32_t>& out, const std::vector<std::uint32_t>& pool_indices,
                std::size_t count, ReplacementPolicy policy, Rng& rng,
                const std::string& class_label) {
  if (count == 0) return;
  if (pool_indices.empty())
    throw std::runtime_error("no documents of class '" + class_label + "' in pool");
  const bool with_replacement =
      policy == ReplacementPolicy::kAlways ||
      (policy == ReplacementPolicy::kAuto && pool_indices.size() < count);
  if (policy == ReplacementPolicy::kNever && pool_indices.size() < count)
    throw std::runtime_error("class '" + class_label + "' pool too small for sampling without replacement");

  if (with_replacement) {
    for (std::size_t i = 0; i < count; ++i)
      out.push_back(pool_indices[rng.next_below(pool_indices.size())]);
  } else {
    // Partial Fisher-Yates over a scratch copy.
    std::vector<std::uint32_t> scratch(pool_indices);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.next_below(scratch.size() - i));
      std::swap(scratch[i], scratch[j]);
      out.push_back(scratch[i]);
    }
  }
}

SampleIndices draw_from_partition(const std::vector<std::vector<std::uint32_t>>& by_class,
                                  const Codeframe& codeframe, const PrevalenceVector& target,
                                  std::size_t q, ReplacementPolicy policy, std::uint64_t seed) {
  if (target.size() != codeframe.size())
    throw std::invalid_argument("target prevalence/codeframe size mismatch");
  const auto counts = allocate_counts(target, q);
  Rng rng(seed);
  SampleIndices sample;
  sample.indices.reserve(q);
  for (std::size_t c = 0; c < counts.size(); ++c)
    draw_class(sample.indices, by_class[c], counts[c], policy, rng, codeframe.label(c));
  return sample;
}

}  // namespace

SampleIndices draw_sample(const LabelledCollection& pool, const PrevalenceVector& target,
                          std::size_t q, ReplacementPolicy policy, std::uint64_t seed) {
  if (pool.empty()) throw std::invalid_argument("empty pool");
  return draw_from_partition(pool.indices_by_class(), pool.codeframe(), target, q, policy, seed);
}

AppSamples::AppSamples(const LabelledCollection& pool, SamplingPlan plan, PrevalenceGrid grid)
    : plan_(plan), grid_(std::move(grid)), codeframe_(pool.codeframe()),
      by_class_(pool.indices_by_class()) {
  if (pool.empty()) throw std::invalid_argument("empty pool");
  if (plan_.m < 1 || plan_.q < 1) throw std::invalid_argument("sampling plan needs m >= 1, q >= 1");
  if (!grid_.points.empty() && grid_.points.front().size() != codeframe_.size())
    throw std::invalid_argument("grid/codeframe size mismatch");
}

SampleIndices AppSamples::sample(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("sample index out of range");
  const std::size_t g = grid_point(i);
  const std::size_t r = replicate(i);
  return draw_from_partition(by_class_, codeframe_, grid_.points[g], plan_.q, plan_.policy,
                             mix_seed(plan_.seed, g, r));
}

std::pair<PrevalenceVector, SampleIndices> npp_sample(const LabelledCollection& pool) {
  if (pool.empty()) throw std::invalid_argument("empty pool");
  SampleIndices all;
  all.indices.resize(pool.size());
  std::iota(all.indices.begin(), all.indices.end(), 0u);
  return {prevalence(pool), std::move(all)};
}

void export_samples(std::ostream& out, const AppSamples& samples) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out << samples.grid_point(i) << ' ' << samples.replicate(i);
    for (std::uint32_t idx : samples.sample(i).indices) out << ' ' << idx;
    out << '\n';
  }
}

}  // namespace quantbench
