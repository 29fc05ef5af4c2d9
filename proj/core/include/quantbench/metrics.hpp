#pragma once

#include "quantbench/types.hpp"

namespace quantbench {

struct SmoothingConfig {
  double epsilon;  // > 0
};

// Mean absolute error between two distributions over the same codeframe:
//   (1/|Y|) * sum_y |p_hat(y) - p(y)|
double ae(const PrevalenceVector& p, const PrevalenceVector& p_hat);

// Additive smoothing: p_s(y) = (eps + p(y)) / (eps*|Y| + sum p). Output is
// strictly positive and sums to 1.
PrevalenceVector smooth(const PrevalenceVector& p, const SmoothingConfig& cfg);

// Relative absolute error with additive smoothing, eps = 1/(2*sample_size):
//   (1/|Y|) * sum_y |p_hat_s(y) - p_s(y)| / p_s(y)
// Always finite, including zero-prevalence classes.
double rae(const PrevalenceVector& p, const PrevalenceVector& p_hat, std::size_t sample_size);

// Distribution shift between a training distribution and a test sample:
// the absolute error between the two.
double shift(const PrevalenceVector& train_prev, const PrevalenceVector& sample_prev);

// Upper bound of ae for a fixed true distribution p:
//   2 * (1 - min_y p(y)) / |Y|
double ae_upper_bound(const PrevalenceVector& p);

}  // namespace quantbench
