#include "quantbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace quantbench {

double ae(const PrevalenceVector& p, const PrevalenceVector& p_hat) {
  if (p.size() != p_hat.size()) throw std::invalid_argument("codeframe size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p_hat[i] - p[i]);
  return sum / static_cast<double>(p.size());
}

PrevalenceVector smooth(const PrevalenceVector& p, const SmoothingConfig& cfg) {
  if (cfg.epsilon <= 0.0) throw std::invalid_argument("smoothing epsilon must be positive");
  double mass = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) mass += p[i];
  const double denom = cfg.epsilon * static_cast<double>(p.size()) + mass;
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = (cfg.epsilon + p[i]) / denom;
  return PrevalenceVector(std::move(out));
}

double rae(const PrevalenceVector& p, const PrevalenceVector& p_hat, std::size_t sample_size) {
  if (p.size() != p_hat.size()) throw std::invalid_argument("codeframe size mismatch");
  if (sample_size < 1) throw std::invalid_argument("sample size must be >= 1");
  const SmoothingConfig cfg{1.0 / (2.0 * static_cast<double>(sample_size))};
  const PrevalenceVector ps = smooth(p, cfg);
  const PrevalenceVector qs = smooth(p_hat, cfg);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(qs[i] - ps[i]) / ps[i];
  return sum / static_cast<double>(p.size());
}

double shift(const PrevalenceVector& train_prev, const PrevalenceVector& sample_prev) {
  return ae(train_prev, sample_prev);
}

double ae_upper_bound(const PrevalenceVector& p) {
  double min_p = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) min_p = std::min(min_p, p[i]);
  return 2.0 * (1.0 - min_p) / static_cast<double>(p.size());
}

}  // namespace quantbench
