#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "quantbench/classifier.hpp"
#include "quantbench/types.hpp"

namespace quantbench {

enum class Method {
  kCC,          // classify and count
  kACC,         // adjusted classify and count (hard rates)
  kPCC,         // probabilistic classify and count
  kPACC,        // probabilistic adjusted classify and count (soft rates)
  kSLD,         // EM posterior/prevalence re-estimation
  kHDy,         // Hellinger-distance mixture matching, one-vs-all
  kMLPE,        // maximum likelihood prevalence estimator (training prior)
  kEnsemblePtr, // PACC ensemble, dynamic selection by training prevalence
  kEnsembleAE   // PACC ensemble, static selection by training error
};

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct SldConfig {
  double epsilon = 1e-4;  // max-norm stopping threshold
  int max_iter = 1000;
};

struct SldTrace {
  std::vector<double> objective;  // mean log row-normalizer per iterate
  std::size_t iterations = 0;
};

// EM iteration over posterior rows: rescale each row by the ratio of the
// current estimate to the training prior, renormalize, average into the next
// estimate; stop at mutual consistency. Classes with zero prior keep zero
// mass throughout.
PrevalenceVector sld_em(const PosteriorMatrix& posteriors, std::span<const std::uint32_t> rows,
                        const PrevalenceVector& prior, const SldConfig& cfg = {},
                        SldTrace* trace = nullptr);

// Normalized histogram over [0, 1] with equal-width bins; mass sums to 1.
std::vector<double> histogram_density(std::span<const double> values, std::size_t bins);

// Hellinger distance between two histograms: sqrt(0.5 * sum (sqrt p - sqrt q)^2).
double hellinger_distance(std::span<const double> p, std::span<const double> q);

using HistogramFamily = std::vector<std::vector<double>>;  // one histogram per bin count

// Mean Hellinger distance between alpha*pos + (1-alpha)*neg and the test
// histograms, averaged across the bin configurations.
double hdy_mixture_distance(const HistogramFamily& pos, const HistogramFamily& neg,
                            const HistogramFamily& test, double alpha);

// Scans alpha over {0, 0.01, ..., 1} and returns the minimizer (lowest alpha
// on ties).
double hdy_alpha_search(const HistogramFamily& pos, const HistogramFamily& neg,
                        const HistogramFamily& test);

// Solves rates * p = observed for p on the simplex. Least squares first;
// when the system is ill-conditioned (condition number > 1e8) or the raw
// solution leaves [-0.1, 1.1], falls back to exact constrained least squares
// over the simplex. The result is clipped and L1-normalized; never throws
// for singular systems.
PrevalenceVector solve_adjustment(const ConfusionRates& rates, const PrevalenceVector& observed);

enum class EnsemblePolicy { kPtr, kAE };

struct EnsembleParams {
  std::size_t n = 50;    // base quantifiers drawn
  std::size_t q = 1000;  // documents per member training sample
};

// One PACC base quantifier of an ensemble.
struct EnsembleMember {
  LogisticModel model;
  ConfusionRates rates;  // soft confusion rates of the member
  PrevalenceVector training_prevalence;
  double training_error;  // mean AE over the ensemble's training samples
  SampleIndices sample;   // positions into the ensemble's training pool
};

// Pool-wide posterior cache: lets many samples from one pool be quantified
// without re-running the classifier per sample.
class PoolCache {
 public:
  std::size_t pool_size() const { return pool_size_; }
  std::size_t models() const { return per_model_.size(); }
  const PosteriorMatrix& posteriors(std::size_t model_index) const {
    return per_model_[model_index];
  }

 private:
  friend class Quantifier;
  std::vector<PosteriorMatrix> per_model_;
  std::size_t pool_size_ = 0;
};

// A trained prevalence estimator. Immutable after fit; estimate() is pure
// and safe to call concurrently.
class Quantifier {
 public:
  Method method() const { return method_; }
  const Codeframe& codeframe() const { return codeframe_; }

  PrevalenceVector estimate(std::span<const SparseDocument> docs) const;

  PoolCache prepare(std::span<const SparseDocument> pool_docs) const;
  PrevalenceVector estimate(const PoolCache& cache, const SampleIndices& sample) const;

  // Introspection (null when the method has no such state).
  const LogisticModel* model() const;
  const ConfusionRates* rates() const;
  const PrevalenceVector* prior() const;
  std::span<const EnsembleMember> members() const;

  void save(std::ostream& out) const;
  static Quantifier load(std::istream& in);

  struct ClassifyState {  // CC and PCC
    LogisticModel model;
  };
  struct AdjustedState {  // ACC (hard rates) and PACC (soft rates)
    LogisticModel model;
    ConfusionRates rates;
  };
  struct SldState {
    LogisticModel model;
    PrevalenceVector prior;
    SldConfig config;
  };
  struct HdyState {
    LogisticModel model;
    // [class][bin-config][bin]: densities of the one-vs-all posterior for
    // held-out positives/negatives of that class.
    std::vector<std::vector<std::vector<double>>> positive_hists;
    std::vector<std::vector<std::vector<double>>> negative_hists;
  };
  struct MlpeState {
    PrevalenceVector prior;
  };
  struct EnsembleState {
    EnsemblePolicy policy;
    std::vector<EnsembleMember> members;
  };
  using State = std::variant<ClassifyState, AdjustedState, SldState, HdyState, MlpeState,
                             EnsembleState>;

 private:
  Quantifier(Method method, Codeframe codeframe, State state)
      : method_(method), codeframe_(std::move(codeframe)), state_(std::move(state)) {}

  PrevalenceVector estimate_rows(const PoolCache& cache,
                                 std::span<const std::uint32_t> rows) const;

  friend Quantifier fit(Method, const LabelledCollection&, double, std::uint64_t,
                        const LrConfig&, const EnsembleParams&);
  friend Quantifier fit_ensemble(EnsemblePolicy, const LabelledCollection&, double, std::size_t,
                                 std::size_t, std::uint64_t, const LrConfig&);

  Method method_;
  Codeframe codeframe_;
  State state_;
};

// Trains a quantifier of the given method on `train`. C is the inverse
// regularization strength of the underlying classifier (ignored by MLPE).
Quantifier fit(Method method, const LabelledCollection& train, double C, std::uint64_t seed,
               const LrConfig& config = {}, const EnsembleParams& ensemble = {});

// Builds a PACC ensemble: n member samples of q_size documents drawn from
// `train` at target prevalences uniform on the simplex (with replacement for
// scarce classes). The AE policy statically keeps the n/2 members with the
// lowest mean AE over all n training samples; Ptr keeps all members and
// selects dynamically at estimation time. n must be even.
Quantifier fit_ensemble(EnsemblePolicy policy, const LabelledCollection& train, double C,
                        std::size_t n, std::size_t q_size, std::uint64_t seed,
                        const LrConfig& config = {});

}  // namespace quantbench
