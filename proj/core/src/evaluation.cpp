#include "quantbench/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "quantbench/metrics.hpp"
#include "quantbench/rng.hpp"

namespace quantbench {

namespace {

// Regularized incomplete beta function I_x(a, b), continued fraction
// evaluated with the modified Lentz scheme.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_cdf(double t, double dof) {
  if (dof <= 0.0) throw std::invalid_argument("degrees of freedom must be positive");
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * reg_inc_beta(dof / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double paired_ttest(std::span<const double> errors_a, std::span<const double> errors_b) {
  if (errors_a.size() != errors_b.size())
    throw std::invalid_argument("paired t-test needs equal-length samples");
  const std::size_t n = errors_a.size();
  if (n < 2) throw std::invalid_argument("paired t-test needs at least 2 pairs");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += errors_a[i] - errors_b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = errors_a[i] - errors_b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) return mean == 0.0 ? 1.0 : 0.0;
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const double dof = static_cast<double>(n - 1);
  return reg_inc_beta(dof / 2.0, 0.5, dof / (dof + t * t));  // two-tailed
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::vector<ExperimentRecord> run_experiment(const DatasetBundle& bundle,
                                             std::span<const Method> methods, Loss loss,
                                             const RunPlan& plan, std::uint64_t seed,
                                             std::vector<MethodRunInfo>* infos) {
  if (methods.empty()) throw std::invalid_argument("no methods to run");
  using clock = std::chrono::steady_clock;

  const LabelledCollection full_train =
      LabelledCollection::concat(bundle.train, bundle.validation);
  const PrevalenceVector train_prev = prevalence(full_train);
  const PrevalenceGrid grid = enumerate_grid(bundle.codeframe().size(), plan.grid_step);

  SamplingPlan test_plan = plan.test_plan;
  test_plan.seed = mix_seed(seed, fnv1a(bundle.name), 0xA55ull);
  const AppSamples samples(bundle.test, test_plan, grid);

  // Realized prevalences are method-independent; compute them once.
  std::vector<SampleIndices> sample_indices(samples.size());
  std::vector<PrevalenceVector> realized;
  realized.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    sample_indices[i] = samples.sample(i);
    realized.push_back(prevalence(bundle.test, sample_indices[i]));
  }

  const int jobs = plan.jobs > 0 ? plan.jobs
                                 : std::max(1u, std::thread::hardware_concurrency());

  std::vector<ExperimentRecord> records;
  // The PACC grid search is reused by the ensemble methods.
  std::optional<GridSearchResult> pacc_search;

  for (Method method : methods) {
    MethodRunInfo info;
    info.method = method_name(method);
    try {
      const auto t0 = clock::now();
      double best_C = 1.0;
      if (method != Method::kMLPE) {
        const bool is_ensemble =
            method == Method::kEnsemblePtr || method == Method::kEnsembleAE;
        const Method search_method = is_ensemble ? Method::kPACC : method;
        if (is_ensemble && pacc_search) {
          info.c_scores = pacc_search->scores;
          best_C = pacc_search->best_C;
        } else {
          const GridSearchResult search =
              select_C(search_method, bundle.train, bundle.validation, loss,
                       plan.validation_plan, mix_seed(seed, fnv1a(bundle.name), 0x5e1ull),
                       grid, plan.lr, plan.ensemble, jobs);
          info.c_scores = search.scores;
          best_C = search.best_C;
          if (search_method == Method::kPACC) pacc_search = search;
        }
      }
      info.best_C = best_C;
      const auto t1 = clock::now();
      info.selection_seconds = std::chrono::duration<double>(t1 - t0).count();

      const Quantifier q = fit(method, full_train, best_C,
                               mix_seed(seed, fnv1a(bundle.name), fnv1a(info.method)), plan.lr,
                               plan.ensemble);
      const PoolCache cache = q.prepare(bundle.test.documents());

      std::vector<std::optional<ExperimentRecord>> method_records(samples.size());
      std::atomic<std::size_t> next{0};
      std::atomic<bool> failed{false};
      std::string failure;
      std::mutex failure_mutex;
      auto worker = [&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= samples.size() || failed.load()) break;
          try {
            const SampleIndices& idx = sample_indices[i];
            ExperimentRecord rec{bundle.name,
                                 info.method,
                                 loss,
                                 samples.grid_point(i),
                                 samples.replicate(i),
                                 samples.target(i),
                                 realized[i],
                                 q.estimate(cache, idx),
                                 0.0,
                                 0.0,
                                 0.0};
            rec.shift = shift(train_prev, rec.realized_prev);
            rec.ae = ae(rec.realized_prev, rec.estimated_prev);
            rec.rae = rae(rec.realized_prev, rec.estimated_prev, idx.size());
            method_records[i] = std::move(rec);
          } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            failed.store(true);
            failure = e.what();
          }
        }
      };
      if (jobs <= 1) {
        worker();
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
      }
      if (failed.load()) throw std::runtime_error(failure);
      info.evaluation_seconds = std::chrono::duration<double>(clock::now() - t1).count();
      for (auto& rec : method_records) records.push_back(std::move(*rec));
    } catch (const std::exception& e) {
      info.ok = false;
      info.error = e.what();
    }
    if (infos) infos->push_back(std::move(info));
  }
  return records;
}

namespace {

double record_error(const ExperimentRecord& r, Loss measure) {
  return measure == Loss::kAE ? r.ae : r.rae;
}

using SampleKey = std::tuple<std::string, std::size_t, std::size_t>;  // dataset, grid, replicate

// Paired error vectors over the samples both methods cover.
std::pair<std::vector<double>, std::vector<double>> paired_errors(
    const std::map<SampleKey, double>& a, const std::map<SampleKey, double>& b) {
  std::vector<double> va, vb;
  for (const auto& [key, err] : a) {
    auto it = b.find(key);
    if (it == b.end()) continue;
    va.push_back(err);
    vb.push_back(it->second);
  }
  return {std::move(va), std::move(vb)};
}

Significance significance_vs_best(const std::map<SampleKey, double>& best,
                                  const std::map<SampleKey, double>& other) {
  const auto [a, b] = paired_errors(best, other);
  if (a.size() < 2) return Significance::kIndistinct;
  const double p = paired_ttest(a, b);
  if (p <= 0.001) return Significance::kDistinct;
  if (p < 0.05) return Significance::kWeaklyDistinct;
  return Significance::kIndistinct;
}

void fill_ranks_and_colors(std::vector<ComparisonCell>& row,
                           const std::vector<std::string>& methods) {
  std::vector<std::size_t> order;
  for (std::size_t m = 0; m < row.size(); ++m)
    if (row[m].n > 0) order.push_back(m);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (row[a].mean_error != row[b].mean_error) return row[a].mean_error < row[b].mean_error;
    return methods[a] < methods[b];
  });
  double best = std::numeric_limits<double>::infinity();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t m : order) {
    best = std::min(best, row[m].mean_error);
    worst = std::max(worst, row[m].mean_error);
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    row[order[i]].rank = static_cast<int>(i) + 1;
    row[order[i]].color_score =
        worst > best ? (worst - row[order[i]].mean_error) / (worst - best) : 1.0;
  }
}

}  // namespace

ComparisonReport build_comparison(std::span<const ExperimentRecord> records, Loss measure) {
  if (records.empty()) throw std::invalid_argument("no records");
  ComparisonReport report;
  report.measure = measure;

  for (const auto& r : records) {
    if (std::find(report.methods.begin(), report.methods.end(), r.method) ==
        report.methods.end())
      report.methods.push_back(r.method);
    if (std::find(report.datasets.begin(), report.datasets.end(), r.dataset) ==
        report.datasets.end())
      report.datasets.push_back(r.dataset);
  }
  const std::size_t n_methods = report.methods.size();
  const std::size_t n_datasets = report.datasets.size();
  auto method_index = [&](const std::string& m) {
    return static_cast<std::size_t>(
        std::find(report.methods.begin(), report.methods.end(), m) - report.methods.begin());
  };
  auto dataset_index = [&](const std::string& d) {
    return static_cast<std::size_t>(
        std::find(report.datasets.begin(), report.datasets.end(), d) - report.datasets.begin());
  };

  // errors[d][m]: sample key -> error; pooled[m] spans every dataset.
  std::vector<std::vector<std::map<SampleKey, double>>> errors(
      n_datasets, std::vector<std::map<SampleKey, double>>(n_methods));
  std::vector<std::map<SampleKey, double>> pooled(n_methods);
  for (const auto& r : records) {
    const SampleKey key{r.dataset, r.grid_point, r.replicate};
    const double err = record_error(r, measure);
    errors[dataset_index(r.dataset)][method_index(r.method)][key] = err;
    pooled[method_index(r.method)][key] = err;
  }

  auto build_row = [&](const std::vector<std::map<SampleKey, double>>& row_errors,
                       bool* tie_flag) {
    std::vector<ComparisonCell> row(n_methods);
    for (std::size_t m = 0; m < n_methods; ++m) {
      const auto& errs = row_errors[m];
      row[m].n = errs.size();
      if (errs.empty()) continue;
      double total = 0.0;
      for (const auto& [k, e] : errs) total += e;
      row[m].mean_error = total / static_cast<double>(errs.size());
    }
    // Best by mean; ties break by method-name order and are flagged.
    std::size_t best_m = n_methods;
    for (std::size_t m = 0; m < n_methods; ++m) {
      if (row[m].n == 0) continue;
      if (best_m == n_methods || row[m].mean_error < row[best_m].mean_error ||
          (row[m].mean_error == row[best_m].mean_error &&
           report.methods[m] < report.methods[best_m]))
        best_m = m;
    }
    if (tie_flag) {
      *tie_flag = false;
      for (std::size_t m = 0; m < n_methods; ++m)
        if (m != best_m && row[m].n > 0 && row[m].mean_error == row[best_m].mean_error)
          *tie_flag = true;
    }
    if (best_m < n_methods) {
      row[best_m].best = true;
      row[best_m].significance = Significance::kBest;
      for (std::size_t m = 0; m < n_methods; ++m) {
        if (m == best_m || row[m].n == 0) continue;
        row[m].significance = significance_vs_best(row_errors[best_m], row_errors[m]);
      }
    }
    fill_ranks_and_colors(row, report.methods);
    return row;
  };

  report.tie_flag.resize(n_datasets, false);
  for (std::size_t d = 0; d < n_datasets; ++d) {
    bool tie = false;
    report.cells.push_back(build_row(errors[d], &tie));
    report.tie_flag[d] = tie;
  }
  report.average_row = build_row(pooled, nullptr);

  report.average_ranks.assign(n_methods, 0.0);
  std::vector<std::size_t> rank_counts(n_methods, 0);
  for (std::size_t d = 0; d < n_datasets; ++d) {
    for (std::size_t m = 0; m < n_methods; ++m) {
      if (report.cells[d][m].n == 0) continue;
      report.average_ranks[m] += report.cells[d][m].rank;
      ++rank_counts[m];
    }
  }
  for (std::size_t m = 0; m < n_methods; ++m)
    if (rank_counts[m] > 0) report.average_ranks[m] /= static_cast<double>(rank_counts[m]);

  return report;
}

std::vector<ShiftBin> shift_bins(std::span<const ExperimentRecord> records, Loss measure,
                                 double width) {
  if (width <= 0.0) throw std::invalid_argument("bin width must be positive");
  // First bin [0, w] closed, then (kw, (k+1)w]; the epsilon keeps exact
  // boundary values in the lower bin despite floating point noise.
  auto bin_of = [&](double s) {
    const double idx = std::ceil((s - 1e-9) / width) - 1.0;
    return idx < 0.0 ? std::size_t{0} : static_cast<std::size_t>(idx);
  };
  std::size_t n_bins = 0;
  for (const auto& r : records) n_bins = std::max(n_bins, bin_of(r.shift) + 1);

  std::vector<ShiftBin> bins(n_bins);
  std::vector<std::set<SampleKey>> bin_samples(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lo = static_cast<double>(b) * width;
    bins[b].hi = static_cast<double>(b + 1) * width;
  }
  for (const auto& r : records) {
    const std::size_t b = bin_of(r.shift);
    bins[b].mean_error[r.method] += record_error(r, measure);
    bins[b].count[r.method] += 1;
    bin_samples[b].insert(SampleKey{r.dataset, r.grid_point, r.replicate});
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].samples = bin_samples[b].size();
    for (auto& [method, total] : bins[b].mean_error)
      total /= static_cast<double>(bins[b].count[method]);
  }
  return bins;
}

std::vector<DiagonalPoint> diagonal_data(std::span<const ExperimentRecord> records,
                                         std::size_t class_index) {
  std::map<long long, DiagonalPoint> points;  // keyed by rounded true prevalence
  for (const auto& r : records) {
    if (class_index >= r.target_prev.size())
      throw std::invalid_argument("class index out of range");
    const double t = r.target_prev[class_index];
    const long long key = std::llround(t * 1e9);
    auto& point = points[key];
    point.true_prev = t;
    point.mean_estimated[r.method] += r.estimated_prev[class_index];
    point.count[r.method] += 1;
  }
  std::vector<DiagonalPoint> out;
  out.reserve(points.size());
  for (auto& [key, point] : points) {
    for (auto& [method, total] : point.mean_estimated)
      total /= static_cast<double>(point.count[method]);
    out.push_back(std::move(point));
  }
  return out;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("empty sample");
  if (sorted.size() == 1) return sorted[0];
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - std::floor(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

std::vector<BiasSummary> bias_data(std::span<const ExperimentRecord> records,
                                   std::size_t class_index) {
  std::vector<std::string> methods;
  for (const auto& r : records)
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);

  std::vector<BiasSummary> out;
  out.reserve(methods.size());
  for (const auto& method : methods) {
    BiasSummary summary;
    summary.method = method;
    for (const auto& r : records) {
      if (r.method != method) continue;
      if (class_index >= r.estimated_prev.size())
        throw std::invalid_argument("class index out of range");
      summary.signed_errors.push_back(r.estimated_prev[class_index] -
                                      r.realized_prev[class_index]);
    }
    std::vector<double> sorted(summary.signed_errors);
    std::sort(sorted.begin(), sorted.end());
    summary.min = sorted.front();
    summary.max = sorted.back();
    summary.q1 = quantile_sorted(sorted, 0.25);
    summary.median = quantile_sorted(sorted, 0.5);
    summary.q3 = quantile_sorted(sorted, 0.75);
    const double iqr = summary.q3 - summary.q1;
    const double lo = summary.q1 - 1.5 * iqr;
    const double hi = summary.q3 + 1.5 * iqr;
    for (double e : sorted)
      if (e < lo || e > hi) ++summary.n_outliers;
    out.push_back(std::move(summary));
  }
  return out;
}

}  // namespace quantbench
