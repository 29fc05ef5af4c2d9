#include "quantbench/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "quantbench/rng.hpp"

namespace quantbench {

PosteriorMatrix PosteriorMatrix::from_rows(std::vector<double> data, std::size_t rows,
                                           std::size_t cols) {
  if (data.size() != rows * cols) throw std::invalid_argument("posterior matrix shape mismatch");
  PosteriorMatrix m(rows, cols);
  m.data_ = std::move(data);
  m.validate();
  return m;
}

void PosteriorMatrix::validate() const {
  for (std::size_t i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < cols_; ++k) {
      const double v = at(i, k);
      if (v < 0.0 || v > 1.0 + 1e-9)
        throw std::invalid_argument("posterior entry outside [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("posterior row does not sum to 1");
  }
}

ConfusionRates ConfusionRates::from_matrix(std::vector<double> row_major, std::size_t k) {
  if (row_major.size() != k * k) throw std::invalid_argument("confusion matrix shape mismatch");
  for (double v : row_major)
    if (v < -1e-12 || v > 1.0 + 1e-6) throw std::invalid_argument("confusion entry outside [0, 1]");
  for (std::size_t j = 0; j < k; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < k; ++i) col += row_major[i * k + j];
    if (std::abs(col - 1.0) > 1e-6)
      throw std::invalid_argument("confusion column does not sum to 1");
  }
  return ConfusionRates(std::move(row_major), k);
}

ConfusionRates ConfusionRates::identity(std::size_t k) {
  std::vector<double> m(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) m[i * k + i] = 1.0;
  return ConfusionRates(std::move(m), k);
}

ConfusionRates ConfusionRates::column_normalized(const std::vector<double>& row_major,
                                                 std::size_t k) {
  if (row_major.size() != k * k) throw std::invalid_argument("confusion matrix shape mismatch");
  std::vector<double> out(k * k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < k; ++i) col += row_major[i * k + j];
    if (col <= 0.0) {
      out[j * k + j] = 1.0;
    } else {
      for (std::size_t i = 0; i < k; ++i) out[i * k + j] = row_major[i * k + j] / col;
    }
  }
  return ConfusionRates(std::move(out), k);
}

LogisticModel::LogisticModel(std::vector<double> weights, std::vector<double> bias,
                             Codeframe codeframe, std::uint32_t n_features, double C)
    : weights_(std::move(weights)), bias_(std::move(bias)), codeframe_(std::move(codeframe)),
      n_features_(n_features), C_(C) {
  if (weights_.size() != static_cast<std::size_t>(n_features_) * codeframe_.size())
    throw std::invalid_argument("weight matrix shape mismatch");
  if (bias_.size() != codeframe_.size()) throw std::invalid_argument("bias shape mismatch");
  if (C_ <= 0.0) throw std::invalid_argument("C must be positive");
}

LrObjective::LrObjective(const LabelledCollection& data, double C)
    : data_(data), C_(C), n_classes_(data.codeframe().size()),
      n_features_(data.feature_dimension()) {
  n_params_ = static_cast<std::size_t>(n_features_) * n_classes_ + n_classes_;
}

namespace {

// scores[k] = b_k + sum_f w[f*K+k] * x_f ; weights are feature-major so the
// inner loop touches K contiguous values.
void doc_scores(std::span<const double> params, std::uint32_t n_features, std::size_t K,
                const SparseDocument& doc, double* scores) {
  const double* bias = params.data() + static_cast<std::size_t>(n_features) * K;
  for (std::size_t k = 0; k < K; ++k) scores[k] = bias[k];
  for (const auto& [f, v] : doc.entries()) {
    if (f >= n_features) continue;  // unseen feature, weight is zero
    const double* w = params.data() + static_cast<std::size_t>(f) * K;
    for (std::size_t k = 0; k < K; ++k) scores[k] += w[k] * v;
  }
}

// log(sum_k exp(scores[k])) with max subtraction; scores become posteriors.
double softmax_inplace(double* scores, std::size_t K) {
  double mx = scores[0];
  for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, scores[k]);
  double sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    scores[k] = std::exp(scores[k] - mx);
    sum += scores[k];
  }
  for (std::size_t k = 0; k < K; ++k) scores[k] /= sum;
  return mx + std::log(sum);
}

}  // namespace

double LrObjective::loss(std::span<const double> params) const {
  const std::size_t K = n_classes_;
  std::vector<double> scores(K);
  double total = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    doc_scores(params, n_features_, K, data_.document(i), scores.data());
    double mx = scores[0];
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, scores[k]);
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(scores[k] - mx);
    total += mx + std::log(sum) - scores[data_.label(i)];
  }
  const std::size_t n_weights = static_cast<std::size_t>(n_features_) * K;
  double reg = 0.0;
  for (std::size_t i = 0; i < n_weights; ++i) reg += params[i] * params[i];
  return total + reg / (2.0 * C_);
}

void LrObjective::gradient(std::span<const double> params, std::span<double> out) const {
  const std::size_t K = n_classes_;
  const std::size_t n_weights = static_cast<std::size_t>(n_features_) * K;
  for (std::size_t i = 0; i < n_weights; ++i) out[i] = params[i] / C_;
  for (std::size_t i = n_weights; i < n_params_; ++i) out[i] = 0.0;

  std::vector<double> p(K);
  double* grad_bias = out.data() + n_weights;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const SparseDocument& doc = data_.document(i);
    doc_scores(params, n_features_, K, doc, p.data());
    softmax_inplace(p.data(), K);
    p[data_.label(i)] -= 1.0;
    for (const auto& [f, v] : doc.entries()) {
      if (f >= n_features_) continue;
      double* g = out.data() + static_cast<std::size_t>(f) * K;
      for (std::size_t k = 0; k < K; ++k) g[k] += p[k] * v;
    }
    for (std::size_t k = 0; k < K; ++k) grad_bias[k] += p[k];
  }
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

LogisticModel train_lr(const LabelledCollection& data, double C, std::uint64_t /*seed*/,
                       const LrConfig& config) {
  if (data.empty()) throw std::invalid_argument("empty training set");
  if (C <= 0.0) throw std::invalid_argument("C must be positive");
  {
    const auto counts = data.label_counts();
    std::size_t present = 0;
    for (std::size_t c : counts) present += c > 0 ? 1 : 0;
    if (present < 2) throw std::invalid_argument("degenerate training set");
  }

  const LrObjective objective(data, C);
  const std::size_t dim = objective.dim();
  std::vector<double> x(dim, 0.0), grad(dim), x_new(dim), grad_new(dim), direction(dim);

  double fx = objective.loss(x);
  objective.gradient(x, grad);

  std::vector<double> trace{fx};
  bool converged = max_norm(grad) < config.grad_tolerance;

  // L-BFGS history.
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  int iter = 0;
  for (; iter < config.max_iter && !converged; ++iter) {
    // Two-loop recursion for direction = -H * grad.
    direction = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t h = s_hist.size(); h-- > 0;) {
      alpha[h] = rho_hist[h] * dot(s_hist[h], direction);
      for (std::size_t i = 0; i < dim; ++i) direction[i] -= alpha[h] * y_hist[h][i];
    }
    if (!s_hist.empty()) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& v : direction) v *= gamma;
    }
    for (std::size_t h = 0; h < s_hist.size(); ++h) {
      const double beta = rho_hist[h] * dot(y_hist[h], direction);
      for (std::size_t i = 0; i < dim; ++i) direction[i] += (alpha[h] - beta) * s_hist[h][i];
    }
    for (double& v : direction) v = -v;

    double descent = dot(grad, direction);
    if (descent >= 0.0) {
      // Fall back to steepest descent if curvature information went stale.
      for (std::size_t i = 0; i < dim; ++i) direction[i] = -grad[i];
      descent = -dot(grad, grad);
    }

    // Backtracking Armijo line search; guarantees a non-increasing trace.
    double step = s_hist.empty() ? std::min(1.0, 1.0 / (1.0 + max_norm(grad))) : 1.0;
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < dim; ++i) x_new[i] = x[i] + step * direction[i];
      f_new = objective.loss(x_new);
      if (f_new <= fx + 1e-4 * step * descent) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    objective.gradient(x_new, grad_new);

    std::vector<double> s(dim), y(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = grad_new[i] - grad[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.lbfgs_history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    x.swap(x_new);
    grad.swap(grad_new);
    fx = f_new;
    trace.push_back(fx);
    converged = max_norm(grad) < config.grad_tolerance;
  }

  const std::size_t K = data.codeframe().size();
  const std::uint32_t F = data.feature_dimension();
  const std::size_t n_weights = static_cast<std::size_t>(F) * K;
  std::vector<double> weights(x.begin(), x.begin() + n_weights);
  std::vector<double> bias(x.begin() + n_weights, x.end());
  LogisticModel model(std::move(weights), std::move(bias), data.codeframe(), F, C);
  model.loss_trace_ = std::move(trace);
  model.converged_ = converged;
  return model;
}

PosteriorMatrix predict_proba(const LogisticModel& model, std::span<const SparseDocument> docs) {
  const std::size_t K = model.n_classes();
  PosteriorMatrix out(docs.size(), K);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto row = out.mutable_row(i);
    for (std::size_t k = 0; k < K; ++k) row[k] = model.bias(k);
    for (const auto& [f, v] : docs[i].entries()) {
      if (f >= model.n_features()) continue;
      const double* w = model.raw_weights().data() + static_cast<std::size_t>(f) * K;
      for (std::size_t k = 0; k < K; ++k) row[k] += w[k] * v;
    }
    softmax_inplace(row.data(), K);
  }
  return out;
}

std::uint32_t argmax_class(std::span<const double> row) {
  std::uint32_t best = 0;
  for (std::uint32_t k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

std::vector<std::uint32_t> predict_hard(const LogisticModel& model,
                                        std::span<const SparseDocument> docs) {
  const PosteriorMatrix proba = predict_proba(model, docs);
  std::vector<std::uint32_t> out(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) out[i] = argmax_class(proba.row(i));
  return out;
}

CrossValResult cross_val_confusion(const LabelledCollection& data, double C, std::size_t k,
                                   ConfusionMode mode, std::uint64_t seed,
                                   const LrConfig& config, bool allow_absent_classes) {
  if (k < 2) throw std::invalid_argument("cross-validation needs k >= 2");
  const std::size_t K = data.codeframe().size();
  const auto counts = data.label_counts();
  for (std::size_t c = 0; c < K; ++c) {
    if (counts[c] == 0) {
      if (!allow_absent_classes)
        throw std::invalid_argument("class '" + data.codeframe().label(c) + "' absent from data");
      continue;
    }
    if (counts[c] < k)
      std::cerr << "warning: class '" << data.codeframe().label(c) << "' has " << counts[c]
                << " members, fewer than " << k << " folds; stratification is best-effort\n";
  }

  // Stratified fold assignment: shuffle within each class, deal round-robin.
  std::vector<std::size_t> fold_of(data.size());
  auto by_class = data.indices_by_class();
  for (std::size_t c = 0; c < K; ++c) {
    Rng rng(mix_seed(seed, 0x5F01Dull + c, k));
    shuffle(by_class[c], rng);
    for (std::size_t j = 0; j < by_class[c].size(); ++j) fold_of[by_class[c][j]] = j % k;
  }

  PosteriorMatrix posteriors(data.size(), K);
  for (std::size_t fold = 0; fold < k; ++fold) {
    SampleIndices train_idx, held_idx;
    for (std::uint32_t i = 0; i < data.size(); ++i)
      (fold_of[i] == fold ? held_idx : train_idx).indices.push_back(i);
    if (held_idx.indices.empty()) continue;
    const LabelledCollection fold_train = data.subset(train_idx);
    const LogisticModel model = train_lr(fold_train, C, seed, config);
    std::vector<SparseDocument> held_docs;
    held_docs.reserve(held_idx.size());
    for (std::uint32_t i : held_idx.indices) held_docs.push_back(data.document(i));
    const PosteriorMatrix fold_proba = predict_proba(model, held_docs);
    for (std::size_t j = 0; j < held_idx.size(); ++j) {
      auto dst = posteriors.mutable_row(held_idx.indices[j]);
      auto src = fold_proba.row(j);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }

  std::vector<double> mass(K * K, 0.0);  // (predicted/posterior i, true j)
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t true_class = data.label(i);
    if (mode == ConfusionMode::kHard) {
      mass[argmax_class(posteriors.row(i)) * K + true_class] += 1.0;
    } else {
      for (std::size_t p = 0; p < K; ++p) mass[p * K + true_class] += posteriors.at(i, p);
    }
  }
  return CrossValResult{ConfusionRates::column_normalized(mass, K), std::move(posteriors)};
}

void LogisticModel::save(std::ostream& out) const {
  out.precision(17);
  out << "quantbench-lr 1\n";
  out << "classes " << codeframe_.size();
  for (const auto& l : codeframe_.labels()) out << ' ' << l;
  out << '\n';
  out << "features " << n_features_ << '\n';
  out << "C " << C_ << '\n';
  out << "bias";
  for (double b : bias_) out << ' ' << b;
  out << '\n';
  for (std::uint32_t f = 0; f < n_features_; ++f) {
    out << f;
    for (std::size_t k = 0; k < codeframe_.size(); ++k) out << ' ' << weight(k, f);
    out << '\n';
  }
}

LogisticModel LogisticModel::load(std::istream& in) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "quantbench-lr" || version != 1)
    throw std::runtime_error("unrecognized model format");
  std::string key;
  std::size_t n_classes = 0;
  in >> key >> n_classes;
  if (key != "classes") throw std::runtime_error("malformed model file");
  std::vector<std::string> labels(n_classes);
  for (auto& l : labels) in >> l;
  std::uint32_t n_features = 0;
  in >> key >> n_features;
  if (key != "features") throw std::runtime_error("malformed model file");
  double C = 0.0;
  in >> key >> C;
  if (key != "C") throw std::runtime_error("malformed model file");
  std::vector<double> bias(n_classes);
  in >> key;
  if (key != "bias") throw std::runtime_error("malformed model file");
  for (auto& b : bias) in >> b;
  std::vector<double> weights(static_cast<std::size_t>(n_features) * n_classes);
  for (std::uint32_t f = 0; f < n_features; ++f) {
    std::uint32_t idx = 0;
    in >> idx;
    for (std::size_t k = 0; k < n_classes; ++k)
      in >> weights[static_cast<std::size_t>(idx) * n_classes + k];
  }
  if (!in) throw std::runtime_error("truncated model file");
  return LogisticModel(std::move(weights), std::move(bias), Codeframe(std::move(labels)),
                       n_features, C);
}

}  // namespace quantbench
