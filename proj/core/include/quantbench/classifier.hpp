#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "quantbench/types.hpp"

namespace quantbench {

// One posterior distribution per document, row-major.
class PosteriorMatrix {
 public:
  PosteriorMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  // Validating constructor for externally assembled matrices.
  static PosteriorMatrix from_rows(std::vector<double> data, std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double at(std::size_t i, std::size_t k) const { return data_[i * cols_ + k]; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> mutable_row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  // Every row must sum to 1 within 1e-9.
  void validate() const;

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

// Column-stochastic misclassification rates: entry (i, j) is the estimated
// probability that the classifier emits class i when the true class is j
// (hard variant), or the expected posterior mass on i given true class j
// (soft variant).
class ConfusionRates {
 public:
  static ConfusionRates from_matrix(std::vector<double> row_major, std::size_t k);
  static ConfusionRates identity(std::size_t k);

  // Normalizes each column of a raw count/mass matrix by its sum. Columns
  // with zero observations fall back to the identity column ("no
  // adjustment" for that class).
  static ConfusionRates column_normalized(const std::vector<double>& row_major, std::size_t k);

  std::size_t classes() const { return k_; }
  double at(std::size_t i, std::size_t j) const { return data_[i * k_ + j]; }
  const std::vector<double>& row_major() const { return data_; }

 private:
  ConfusionRates(std::vector<double> data, std::size_t k) : data_(std::move(data)), k_(k) {}
  std::vector<double> data_;
  std::size_t k_;
};

struct LrConfig {
  int max_iter = 1000;
  double grad_tolerance = 1e-5;  // max-norm of the gradient
  int lbfgs_history = 10;
};

// Multinomial logistic regression model. Posteriors are softmax(W x + b).
class LogisticModel {
 public:
  LogisticModel(std::vector<double> weights, std::vector<double> bias, Codeframe codeframe,
                std::uint32_t n_features, double C);

  std::size_t n_classes() const { return codeframe_.size(); }
  std::uint32_t n_features() const { return n_features_; }
  double C() const { return C_; }
  const Codeframe& codeframe() const { return codeframe_; }

  // weight for (class k, feature f); stored feature-major.
  double weight(std::size_t k, std::uint32_t f) const { return weights_[f * n_classes() + k]; }
  double bias(std::size_t k) const { return bias_[k]; }
  const std::vector<double>& raw_weights() const { return weights_; }
  const std::vector<double>& raw_bias() const { return bias_; }

  // Objective value per accepted optimizer iterate, first entry = value at
  // the starting point. Non-increasing by construction.
  const std::vector<double>& loss_trace() const { return loss_trace_; }
  bool converged() const { return converged_; }

  void save(std::ostream& out) const;
  static LogisticModel load(std::istream& in);

 private:
  friend LogisticModel train_lr(const LabelledCollection&, double, std::uint64_t,
                                const LrConfig&);
  std::vector<double> weights_;  // feature-major [f * K + k]
  std::vector<double> bias_;
  Codeframe codeframe_;
  std::uint32_t n_features_;
  double C_;
  std::vector<double> loss_trace_;
  bool converged_ = true;
};

// Regularized multinomial cross-entropy objective over a collection:
//   sum_i -log softmax(W x_i + b)[y_i]  +  (1/C) * (1/2) ||W||^2
// Parameters are packed feature-major weights followed by the bias block.
// The bias is not regularized. Exposed so the analytic gradient can be
// checked against finite differences.
class LrObjective {
 public:
  LrObjective(const LabelledCollection& data, double C);

  std::size_t dim() const { return n_params_; }
  double loss(std::span<const double> params) const;
  void gradient(std::span<const double> params, std::span<double> out) const;

 private:
  const LabelledCollection& data_;
  double C_;
  std::size_t n_classes_, n_params_;
  std::uint32_t n_features_;
};

// Deterministic full-batch L-BFGS from a zero start; converged when the
// gradient max-norm falls below the tolerance or max_iter is reached.
LogisticModel train_lr(const LabelledCollection& data, double C, std::uint64_t seed,
                       const LrConfig& config = {});

PosteriorMatrix predict_proba(const LogisticModel& model, std::span<const SparseDocument> docs);

// Argmax of the posterior per document; ties break toward the lowest class
// index.
std::vector<std::uint32_t> predict_hard(const LogisticModel& model,
                                        std::span<const SparseDocument> docs);
std::uint32_t argmax_class(std::span<const double> row);

enum class ConfusionMode { kHard, kSoft };

struct CrossValResult {
  ConfusionRates rates;
  PosteriorMatrix posteriors;  // out-of-fold posteriors, in document order
};

// Stratified k-fold cross-validation on `data`: every document is predicted
// exactly once by a model trained on the other folds, and the out-of-fold
// predictions are aggregated into column-normalized ConfusionRates. Classes
// with fewer members than folds get best-effort stratification (with a
// warning); classes absent from the data are an error unless
// allow_absent_classes is set, in which case their rate columns fall back to
// the identity ("no adjustment").
CrossValResult cross_val_confusion(const LabelledCollection& data, double C, std::size_t k,
                                   ConfusionMode mode, std::uint64_t seed,
                                   const LrConfig& config = {},
                                   bool allow_absent_classes = false);

}  // namespace quantbench
