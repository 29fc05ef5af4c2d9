#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "quantbench/types.hpp"

namespace quantbench {

// All lattice points of the (n-1)-simplex with coordinates in
// {0, step, 2*step, ..., 1}. Enumerated in descending lexicographic order,
// so for n=3, step=0.5: (1,0,0), (0.5,0.5,0), (0.5,0,0.5), (0,1,0),
// (0,0.5,0.5), (0,0,1).
struct PrevalenceGrid {
  double step;
  std::vector<PrevalenceVector> points;

  std::size_t size() const { return points.size(); }
};

PrevalenceGrid enumerate_grid(std::size_t n_classes, double step);

enum class ReplacementPolicy {
  kAuto,    // without replacement when the class pool suffices, with otherwise
  kAlways,  // with replacement unconditionally
  kNever    // without replacement; error when a class pool is too small
};

struct SamplingPlan {
  std::size_t m = 25;   // samples per grid point
  std::size_t q = 100;  // sample size
  std::uint64_t seed = 0;
  ReplacementPolicy policy = ReplacementPolicy::kAuto;
};

// Largest-remainder integerization of q*target; counts are >= 0, sum to q,
// and counts/q minimizes L1 distance to target among integer allocations.
// Remainder ties break toward the lower class index.
std::vector<std::size_t> allocate_counts(const PrevalenceVector& target, std::size_t q);

// Draws a sample of q documents from the pool with per-class counts fixed by
// allocate_counts, so the realized prevalence equals counts/q exactly.
// Indices are emitted class by class in codeframe order.
SampleIndices draw_sample(const LabelledCollection& pool, const PrevalenceVector& target,
                          std::size_t q, ReplacementPolicy policy, std::uint64_t seed);

// The APP sample stream for one pool: m samples per grid point, in grid order
// then replicate order. Each sample is seeded independently from
// (seed, grid index, replicate index) and can be regenerated in isolation,
// which also makes parallel generation deterministic.
class AppSamples {
 public:
  AppSamples(const LabelledCollection& pool, SamplingPlan plan, PrevalenceGrid grid);

  std::size_t size() const { return grid_.size() * plan_.m; }
  std::size_t grid_point(std::size_t i) const { return i / plan_.m; }
  std::size_t replicate(std::size_t i) const { return i % plan_.m; }
  const PrevalenceVector& target(std::size_t i) const { return grid_.points[grid_point(i)]; }
  const PrevalenceGrid& grid() const { return grid_; }
  const SamplingPlan& plan() const { return plan_; }

  SampleIndices sample(std::size_t i) const;

 private:
  SamplingPlan plan_;
  PrevalenceGrid grid_;
  Codeframe codeframe_;
  std::vector<std::vector<std::uint32_t>> by_class_;
};

// The NPP "protocol": the whole pool as one sample with natural prevalence.
std::pair<PrevalenceVector, SampleIndices> npp_sample(const LabelledCollection& pool);

// One sample per line: grid-point id, replicate id, space-separated indices.
void export_samples(std::ostream& out, const AppSamples& samples);

}  // namespace quantbench
