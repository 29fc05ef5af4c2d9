#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "quantbench/protocol.hpp"
#include "quantbench/quantifier.hpp"
#include "quantbench/types.hpp"

namespace quantbench {

enum class Loss { kAE, kRAE };

std::string loss_name(Loss loss);
Loss loss_from_name(const std::string& name);

// The inverse-regularization grid searched for every method: 1e-4 .. 1e5.
std::vector<double> c_grid();

struct GridSearchResult {
  double best_C = 1.0;
  std::vector<std::pair<double, double>> scores;  // (C, mean validation loss)
  Loss target_loss = Loss::kAE;
};

// Mean loss of a fitted quantifier over a sample stream from `pool`. RAE
// uses each sample's own size for the smoothing factor.
double evaluate_on_samples(const Quantifier& q, const LabelledCollection& pool,
                           const AppSamples& samples, Loss loss);

// Quantification-oriented grid search: for each C, fit `method` on `train`
// and score it over APP samples extracted from `validation`; returns the C
// with the lowest mean loss (ties break toward the smaller C). The caller
// then refits on train + validation with the winner. Grid points are
// independent and searched on up to `jobs` threads; results are merged in
// grid order, so the outcome does not depend on the thread count.
GridSearchResult select_C(Method method, const LabelledCollection& train,
                          const LabelledCollection& validation, Loss loss,
                          const SamplingPlan& plan, std::uint64_t seed,
                          const PrevalenceGrid& grid, const LrConfig& config = {},
                          const EnsembleParams& ensemble = {}, int jobs = 1);

}  // namespace quantbench
