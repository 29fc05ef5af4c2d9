#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quantbench/dataset.hpp"
#include "quantbench/model_selection.hpp"
#include "quantbench/protocol.hpp"
#include "quantbench/quantifier.hpp"

namespace quantbench {

// One (method, dataset, sample) evaluation.
struct ExperimentRecord {
  std::string dataset;
  std::string method;
  Loss loss_target = Loss::kAE;
  std::size_t grid_point = 0;
  std::size_t replicate = 0;
  PrevalenceVector target_prev;
  PrevalenceVector realized_prev;
  PrevalenceVector estimated_prev;
  double shift = 0.0;  // ae(training prevalence, realized_prev)
  double ae = 0.0;
  double rae = 0.0;
};

struct RunPlan {
  double grid_step = 0.05;
  SamplingPlan test_plan{25, 100, 0, ReplacementPolicy::kAuto};
  SamplingPlan validation_plan{5, 100, 0, ReplacementPolicy::kAuto};
  std::size_t min_df = 5;
  EnsembleParams ensemble;
  LrConfig lr;
  int jobs = 0;  // 0 = hardware concurrency
};

struct MethodRunInfo {
  std::string method;
  bool ok = true;
  std::string error;           // set when the method failed
  double best_C = 1.0;
  std::vector<std::pair<double, double>> c_scores;
  double selection_seconds = 0.0;
  double evaluation_seconds = 0.0;
};

// Runs the full protocol for one dataset: per method, select C on the
// validation split, refit on train + validation, and evaluate on the APP
// sample stream drawn from the test split. Every method sees byte-identical
// samples. A failing method is reported in `infos` without aborting the
// others.
std::vector<ExperimentRecord> run_experiment(const DatasetBundle& bundle,
                                             std::span<const Method> methods, Loss loss,
                                             const RunPlan& plan, std::uint64_t seed,
                                             std::vector<MethodRunInfo>* infos = nullptr);

// Two-tailed p-value of the paired t statistic with n-1 degrees of freedom.
// Zero-variance differences give p = 1 when the mean difference is 0 and
// p = 0 otherwise.
double paired_ttest(std::span<const double> errors_a, std::span<const double> errors_b);

// CDF of Student's t distribution, via the regularized incomplete beta.
double student_t_cdf(double t, double dof);

enum class Significance {
  kBest,          // the best method of the row
  kIndistinct,    // p >= 0.05 vs the best
  kWeaklyDistinct,// 0.001 < p < 0.05
  kDistinct       // p <= 0.001
};

struct ComparisonCell {
  double mean_error = 0.0;
  std::size_t n = 0;
  int rank = 0;              // 1 = lowest error in the row
  bool best = false;
  Significance significance = Significance::kDistinct;
  double color_score = 0.0;  // 1 = best of row, 0 = worst of row
};

struct ComparisonReport {
  Loss measure = Loss::kAE;
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  // cells[d][m] follows the datasets/methods ordering above.
  std::vector<std::vector<ComparisonCell>> cells;
  std::vector<ComparisonCell> average_row;   // pooled over all samples
  std::vector<double> average_ranks;         // mean of per-dataset ranks
  std::vector<bool> tie_flag;                // per dataset: best was tied
};

ComparisonReport build_comparison(std::span<const ExperimentRecord> records, Loss measure);

struct ShiftBin {
  double lo = 0.0;  // first bin is [0, w], later bins (lo, hi]
  double hi = 0.0;
  std::size_t samples = 0;  // distinct samples in the bin
  std::map<std::string, double> mean_error;
  std::map<std::string, std::size_t> count;
};

// Bins records by distribution shift: [0, w], then (w, 2w], (2w, 3w], ...
std::vector<ShiftBin> shift_bins(std::span<const ExperimentRecord> records, Loss measure,
                                 double width);

struct DiagonalPoint {
  double true_prev = 0.0;
  std::map<std::string, double> mean_estimated;
  std::map<std::string, std::size_t> count;
};

// Mean estimated prevalence per method at each grid value of the class's
// target prevalence; an ideal quantifier traces the diagonal.
std::vector<DiagonalPoint> diagonal_data(std::span<const ExperimentRecord> records,
                                         std::size_t class_index);

struct BiasSummary {
  std::string method;
  std::vector<double> signed_errors;  // estimated - realized, record order
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  std::size_t n_outliers = 0;  // outside [q1 - 1.5 IQR, q3 + 1.5 IQR]
};

// Signed errors (estimated minus realized prevalence) of one class per
// method, with five-number summaries. Quartiles use linear interpolation
// between order statistics.
std::vector<BiasSummary> bias_data(std::span<const ExperimentRecord> records,
                                   std::size_t class_index);

}  // namespace quantbench
