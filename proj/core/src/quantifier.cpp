#include "quantbench/quantifier.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "quantbench/metrics.hpp"
#include "quantbench/protocol.hpp"
#include "quantbench/rng.hpp"

namespace quantbench {

namespace {

constexpr std::size_t kHdyBinCounts[] = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110};
constexpr double kHdyAlphaStep = 0.01;
constexpr std::size_t kConfusionFolds = 5;

std::vector<std::uint32_t> iota_rows(std::size_t n) {
  std::vector<std::uint32_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0u);
  return rows;
}

PrevalenceVector cc_from_rows(const PosteriorMatrix& posteriors,
                              std::span<const std::uint32_t> rows) {
  std::vector<double> tally(posteriors.cols(), 0.0);
  for (std::uint32_t r : rows) tally[argmax_class(posteriors.row(r))] += 1.0;
  for (double& v : tally) v /= static_cast<double>(rows.size());
  return PrevalenceVector(std::move(tally));
}

PrevalenceVector pcc_from_rows(const PosteriorMatrix& posteriors,
                               std::span<const std::uint32_t> rows) {
  std::vector<double> mean(posteriors.cols(), 0.0);
  for (std::uint32_t r : rows) {
    auto row = posteriors.row(r);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += row[k];
  }
  for (double& v : mean) v /= static_cast<double>(rows.size());
  return PrevalenceVector(std::move(mean));
}

PrevalenceVector clip_normalize(std::vector<double> values) {
  double sum = 0.0;
  for (double& v : values) {
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  if (sum <= 0.0) return PrevalenceVector::uniform(values.size());
  for (double& v : values) v /= sum;
  return PrevalenceVector(std::move(values));
}

// Exact constrained least squares over the simplex by support enumeration:
// for every support S, solve min ||M_S p_S - o||^2 s.t. sum p_S = 1 through
// the KKT system, keep the best feasible candidate.
std::vector<double> simplex_least_squares(const Eigen::MatrixXd& M, const Eigen::VectorXd& o) {
  const std::size_t k = static_cast<std::size_t>(M.cols());
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<double> best(k, 0.0);
  bool found = false;
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> support;
    for (std::size_t j = 0; j < k; ++j)
      if (mask & (1u << j)) support.push_back(static_cast<int>(j));
    const int s = static_cast<int>(support.size());
    Eigen::MatrixXd Ms(M.rows(), s);
    for (int j = 0; j < s; ++j) Ms.col(j) = M.col(support[j]);
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
    kkt.topLeftCorner(s, s) = 2.0 * Ms.transpose() * Ms;
    kkt.topRightCorner(s, 1).setOnes();
    kkt.bottomLeftCorner(1, s).setOnes();
    Eigen::VectorXd rhs(s + 1);
    rhs.head(s) = 2.0 * Ms.transpose() * o;
    rhs(s) = 1.0;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    if (!sol.allFinite()) continue;
    bool feasible = true;
    for (int j = 0; j < s; ++j)
      if (sol(j) < -1e-9) feasible = false;
    if (!feasible) continue;
    const double obj = (Ms * sol.head(s) - o).squaredNorm();
    if (obj < best_obj - 1e-15) {
      best_obj = obj;
      std::fill(best.begin(), best.end(), 0.0);
      for (int j = 0; j < s; ++j) best[static_cast<std::size_t>(support[j])] = sol(j);
      found = true;
    }
  }
  if (!found) return std::vector<double>(k, 1.0 / static_cast<double>(k));
  return best;
}

}  // namespace

PrevalenceVector solve_adjustment(const ConfusionRates& rates, const PrevalenceVector& observed) {
  const std::size_t k = rates.classes();
  if (observed.size() != k) throw std::invalid_argument("codeframe size mismatch");
  Eigen::MatrixXd M(k, k);
  Eigen::VectorXd o(k);
  for (std::size_t i = 0; i < k; ++i) {
    o(static_cast<int>(i)) = observed[i];
    for (std::size_t j = 0; j < k; ++j)
      M(static_cast<int>(i), static_cast<int>(j)) = rates.at(i, j);
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues()(static_cast<int>(k) - 1);
  const double smax = svd.singularValues()(0);
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();

  Eigen::VectorXd p = svd.solve(o);
  bool in_range = p.allFinite();
  for (std::size_t i = 0; in_range && i < k; ++i)
    if (p(static_cast<int>(i)) < -0.1 || p(static_cast<int>(i)) > 1.1) in_range = false;

  // Support enumeration is exponential in |Y|; codeframes here are small.
  if ((cond > 1e8 || !in_range) && k <= 16) {
    return clip_normalize(simplex_least_squares(M, o));
  }
  std::vector<double> values(k);
  for (std::size_t i = 0; i < k; ++i) values[i] = p(static_cast<int>(i));
  return clip_normalize(std::move(values));
}

PrevalenceVector sld_em(const PosteriorMatrix& posteriors, std::span<const std::uint32_t> rows,
                        const PrevalenceVector& prior, const SldConfig& cfg, SldTrace* trace) {
  if (rows.empty()) throw std::invalid_argument("empty sample");
  const std::size_t k = posteriors.cols();
  if (prior.size() != k) throw std::invalid_argument("prior/codeframe size mismatch");
  for (std::size_t c = 0; c < k; ++c)
    if (prior[c] == 0.0)
      std::cerr << "warning: zero training prevalence for class " << c
                << "; its posterior mass is held at zero\n";

  std::vector<double> current(prior.values());
  std::vector<double> ratio(k), next(k);
  if (trace) {
    trace->objective.clear();
    trace->iterations = 0;
  }

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    for (std::size_t c = 0; c < k; ++c)
      ratio[c] = prior[c] > 0.0 ? current[c] / prior[c] : 0.0;
    std::fill(next.begin(), next.end(), 0.0);
    double log_norm_sum = 0.0;
    for (std::uint32_t r : rows) {
      auto row = posteriors.row(r);
      double norm = 0.0;
      for (std::size_t c = 0; c < k; ++c) norm += row[c] * ratio[c];
      log_norm_sum += std::log(std::max(norm, 1e-300));
      if (norm <= 0.0) continue;
      for (std::size_t c = 0; c < k; ++c) next[c] += row[c] * ratio[c] / norm;
    }
    double next_mass = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      next[c] /= static_cast<double>(rows.size());
      next_mass += next[c];
    }
    // Degenerate hand-built input: no row carries mass on a positive-prior
    // class. The data says nothing, keep the prior.
    if (next_mass <= 0.0) return prior;
    if (trace) {
      trace->objective.push_back(log_norm_sum / static_cast<double>(rows.size()));
      trace->iterations = static_cast<std::size_t>(iter) + 1;
    }
    double delta = 0.0;
    for (std::size_t c = 0; c < k; ++c) delta = std::max(delta, std::abs(next[c] - current[c]));
    current = next;
    if (delta < cfg.epsilon) break;
  }
  return PrevalenceVector(std::move(current));
}

std::vector<double> histogram_density(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("need at least one bin");
  if (values.empty()) throw std::invalid_argument("cannot histogram an empty value set");
  std::vector<double> density(bins, 0.0);
  for (double v : values) {
    const double clamped = std::min(1.0, std::max(0.0, v));
    auto b = static_cast<std::size_t>(clamped * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;  // v == 1.0 lands in the last bin
    density[b] += 1.0;
  }
  for (double& d : density) d /= static_cast<double>(values.size());
  return density;
}

double hellinger_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("histogram size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    sum += d * d;
  }
  return std::sqrt(0.5 * sum);
}

double hdy_mixture_distance(const HistogramFamily& pos, const HistogramFamily& neg,
                            const HistogramFamily& test, double alpha) {
  double total = 0.0;
  std::vector<double> mix;
  for (std::size_t b = 0; b < pos.size(); ++b) {
    mix.resize(pos[b].size());
    for (std::size_t i = 0; i < pos[b].size(); ++i)
      mix[i] = alpha * pos[b][i] + (1.0 - alpha) * neg[b][i];
    total += hellinger_distance(mix, test[b]);
  }
  return total / static_cast<double>(pos.size());
}

double hdy_alpha_search(const HistogramFamily& pos, const HistogramFamily& neg,
                        const HistogramFamily& test) {
  double best_alpha = 0.0;
  double best_dist = std::numeric_limits<double>::infinity();
  const int steps = static_cast<int>(std::lround(1.0 / kHdyAlphaStep));
  for (int s = 0; s <= steps; ++s) {
    const double alpha = static_cast<double>(s) * kHdyAlphaStep;
    const double d = hdy_mixture_distance(pos, neg, test, alpha);
    if (d < best_dist) {
      best_dist = d;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kCC: return "cc";
    case Method::kACC: return "acc";
    case Method::kPCC: return "pcc";
    case Method::kPACC: return "pacc";
    case Method::kSLD: return "sld";
    case Method::kHDy: return "hdy";
    case Method::kMLPE: return "mlpe";
    case Method::kEnsemblePtr: return "epacc-ptr";
    case Method::kEnsembleAE: return "epacc-ae";
  }
  throw std::logic_error("unknown method");
}

Method method_from_name(const std::string& name) {
  std::string n;
  n.reserve(name.size());
  for (char c : name) n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (n == "cc") return Method::kCC;
  if (n == "acc") return Method::kACC;
  if (n == "pcc") return Method::kPCC;
  if (n == "pacc") return Method::kPACC;
  if (n == "sld" || n == "emq") return Method::kSLD;
  if (n == "hdy") return Method::kHDy;
  if (n == "mlpe") return Method::kMLPE;
  if (n == "epacc-ptr") return Method::kEnsemblePtr;
  if (n == "epacc-ae") return Method::kEnsembleAE;
  throw std::invalid_argument("unknown quantification method: " + name);
}

const LogisticModel* Quantifier::model() const {
  if (auto* s = std::get_if<ClassifyState>(&state_)) return &s->model;
  if (auto* s = std::get_if<AdjustedState>(&state_)) return &s->model;
  if (auto* s = std::get_if<SldState>(&state_)) return &s->model;
  if (auto* s = std::get_if<HdyState>(&state_)) return &s->model;
  return nullptr;
}

const ConfusionRates* Quantifier::rates() const {
  if (auto* s = std::get_if<AdjustedState>(&state_)) return &s->rates;
  return nullptr;
}

const PrevalenceVector* Quantifier::prior() const {
  if (auto* s = std::get_if<SldState>(&state_)) return &s->prior;
  if (auto* s = std::get_if<MlpeState>(&state_)) return &s->prior;
  return nullptr;
}

std::span<const EnsembleMember> Quantifier::members() const {
  if (auto* s = std::get_if<EnsembleState>(&state_)) return s->members;
  return {};
}

PoolCache Quantifier::prepare(std::span<const SparseDocument> pool_docs) const {
  PoolCache cache;
  cache.pool_size_ = pool_docs.size();
  if (auto* s = std::get_if<EnsembleState>(&state_)) {
    cache.per_model_.reserve(s->members.size());
    for (const auto& member : s->members)
      cache.per_model_.push_back(predict_proba(member.model, pool_docs));
  } else if (const LogisticModel* m = model()) {
    cache.per_model_.push_back(predict_proba(*m, pool_docs));
  }
  return cache;
}

PrevalenceVector Quantifier::estimate(std::span<const SparseDocument> docs) const {
  if (method_ != Method::kMLPE && docs.empty()) throw std::invalid_argument("empty sample");
  const PoolCache cache = prepare(docs);
  const auto rows = iota_rows(docs.size());
  return estimate_rows(cache, rows);
}

PrevalenceVector Quantifier::estimate(const PoolCache& cache, const SampleIndices& sample) const {
  if (method_ == Method::kMLPE) return std::get<MlpeState>(state_).prior;
  if (sample.indices.empty()) throw std::invalid_argument("empty sample");
  sample.check_bounds(cache.pool_size());
  return estimate_rows(cache, sample.indices);
}

PrevalenceVector Quantifier::estimate_rows(const PoolCache& cache,
                                           std::span<const std::uint32_t> rows) const {
  switch (method_) {
    case Method::kMLPE:
      return std::get<MlpeState>(state_).prior;
    case Method::kCC:
      return cc_from_rows(cache.per_model_[0], rows);
    case Method::kPCC:
      return pcc_from_rows(cache.per_model_[0], rows);
    case Method::kACC: {
      const auto& s = std::get<AdjustedState>(state_);
      return solve_adjustment(s.rates, cc_from_rows(cache.per_model_[0], rows));
    }
    case Method::kPACC: {
      const auto& s = std::get<AdjustedState>(state_);
      return solve_adjustment(s.rates, pcc_from_rows(cache.per_model_[0], rows));
    }
    case Method::kSLD: {
      const auto& s = std::get<SldState>(state_);
      return sld_em(cache.per_model_[0], rows, s.prior, s.config);
    }
    case Method::kHDy: {
      const auto& s = std::get<HdyState>(state_);
      const PosteriorMatrix& posteriors = cache.per_model_[0];
      const std::size_t k = codeframe_.size();
      std::vector<double> alphas(k);
      std::vector<double> column(rows.size());
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < rows.size(); ++i) column[i] = posteriors.at(rows[i], c);
        std::vector<std::vector<double>> test_hists;
        test_hists.reserve(std::size(kHdyBinCounts));
        for (std::size_t bins : kHdyBinCounts)
          test_hists.push_back(histogram_density(column, bins));
        alphas[c] = hdy_alpha_search(s.positive_hists[c], s.negative_hists[c], test_hists);
      }
      return clip_normalize(std::move(alphas));
    }
    case Method::kEnsemblePtr:
    case Method::kEnsembleAE: {
      const auto& s = std::get<EnsembleState>(state_);
      const std::size_t k = codeframe_.size();
      std::vector<PrevalenceVector> estimates;
      estimates.reserve(s.members.size());
      for (std::size_t m = 0; m < s.members.size(); ++m)
        estimates.push_back(
            solve_adjustment(s.members[m].rates, pcc_from_rows(cache.per_model_[m], rows)));

      std::vector<std::size_t> selected(s.members.size());
      std::iota(selected.begin(), selected.end(), 0u);
      if (s.policy == EnsemblePolicy::kPtr) {
        std::vector<double> mean(k, 0.0);
        for (const auto& e : estimates)
          for (std::size_t c = 0; c < k; ++c) mean[c] += e[c];
        for (double& v : mean) v /= static_cast<double>(estimates.size());
        std::vector<double> dist(s.members.size());
        for (std::size_t m = 0; m < s.members.size(); ++m) {
          double d2 = 0.0;
          for (std::size_t c = 0; c < k; ++c) {
            const double d = s.members[m].training_prevalence[c] - mean[c];
            d2 += d * d;
          }
          dist[m] = std::sqrt(d2);
        }
        std::stable_sort(selected.begin(), selected.end(),
                         [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
        selected.resize(std::max<std::size_t>(1, s.members.size() / 2));
      }
      std::vector<double> out(k, 0.0);
      for (std::size_t m : selected)
        for (std::size_t c = 0; c < k; ++c) out[c] += estimates[m][c];
      for (double& v : out) v /= static_cast<double>(selected.size());
      return clip_normalize(std::move(out));
    }
  }
  throw std::logic_error("unknown method");
}

namespace {

Quantifier::State make_hdy_state(const LabelledCollection& train, double C, std::uint64_t seed,
                                 const LrConfig& config, LogisticModel model);

}  // namespace

Quantifier fit(Method method, const LabelledCollection& train, double C, std::uint64_t seed,
               const LrConfig& config, const EnsembleParams& ensemble) {
  if (train.empty()) throw std::invalid_argument("empty training set");
  switch (method) {
    case Method::kCC:
    case Method::kPCC:
      return Quantifier(method, train.codeframe(),
                        Quantifier::ClassifyState{train_lr(train, C, seed, config)});
    case Method::kACC: {
      auto cv = cross_val_confusion(train, C, kConfusionFolds, ConfusionMode::kHard, seed, config);
      return Quantifier(method, train.codeframe(),
                        Quantifier::AdjustedState{train_lr(train, C, seed, config),
                                                  std::move(cv.rates)});
    }
    case Method::kPACC: {
      auto cv = cross_val_confusion(train, C, kConfusionFolds, ConfusionMode::kSoft, seed, config);
      return Quantifier(method, train.codeframe(),
                        Quantifier::AdjustedState{train_lr(train, C, seed, config),
                                                  std::move(cv.rates)});
    }
    case Method::kSLD:
      return Quantifier(method, train.codeframe(),
                        Quantifier::SldState{train_lr(train, C, seed, config), prevalence(train),
                                             SldConfig{}});
    case Method::kHDy: {
      LogisticModel model = train_lr(train, C, seed, config);
      return Quantifier(method, train.codeframe(),
                        make_hdy_state(train, C, seed, config, std::move(model)));
    }
    case Method::kMLPE:
      return Quantifier(method, train.codeframe(), Quantifier::MlpeState{prevalence(train)});
    case Method::kEnsemblePtr:
      return fit_ensemble(EnsemblePolicy::kPtr, train, C, ensemble.n, ensemble.q, seed, config);
    case Method::kEnsembleAE:
      return fit_ensemble(EnsemblePolicy::kAE, train, C, ensemble.n, ensemble.q, seed, config);
  }
  throw std::logic_error("unknown method");
}

namespace {

Quantifier::State make_hdy_state(const LabelledCollection& train, double C, std::uint64_t seed,
                                 const LrConfig& config, LogisticModel model) {
  const std::size_t k = train.codeframe().size();
  const auto cv = cross_val_confusion(train, C, kConfusionFolds, ConfusionMode::kSoft, seed, config);
  Quantifier::HdyState state{std::move(model), {}, {}};
  state.positive_hists.resize(k);
  state.negative_hists.resize(k);
  std::vector<double> pos_values, neg_values;
  for (std::size_t c = 0; c < k; ++c) {
    pos_values.clear();
    neg_values.clear();
    for (std::size_t i = 0; i < train.size(); ++i)
      (train.label(i) == c ? pos_values : neg_values).push_back(cv.posteriors.at(i, c));
    if (pos_values.empty() || neg_values.empty())
      throw std::invalid_argument("empty validation side for class " +
                                  train.codeframe().label(c));
    for (std::size_t bins : kHdyBinCounts) {
      state.positive_hists[c].push_back(histogram_density(pos_values, bins));
      state.negative_hists[c].push_back(histogram_density(neg_values, bins));
    }
  }
  return state;
}

}  // namespace

Quantifier fit_ensemble(EnsemblePolicy policy, const LabelledCollection& train, double C,
                        std::size_t n, std::size_t q_size, std::uint64_t seed,
                        const LrConfig& config) {
  if (train.empty()) throw std::invalid_argument("empty training set");
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("ensemble size must be even and >= 2");
  const std::size_t k = train.codeframe().size();

  // Targets are drawn first from one stream so each member's sample seed can
  // be derived independently afterwards.
  Rng target_rng(mix_seed(seed, 0xE75E3Bull, n));
  std::vector<PrevalenceVector> targets;
  targets.reserve(n);
  for (std::size_t m = 0; m < n; ++m)
    targets.emplace_back(random_simplex_point(target_rng, k));

  std::vector<SampleIndices> samples(n);
  std::vector<EnsembleMember> members;
  members.reserve(n);
  for (std::size_t m = 0; m < n; ++m) {
    const std::uint64_t member_seed = mix_seed(seed, 0x313Bull, m);
    PrevalenceVector target = targets[m];
    // A target very close to a simplex corner can yield a sample with fewer
    // than two classes, which is untrainable; nudge toward uniform until the
    // sample is usable.
    for (int attempt = 0;; ++attempt) {
      samples[m] = draw_sample(train, target, q_size, ReplacementPolicy::kAuto,
                               mix_seed(member_seed, attempt, 0xD1ull));
      std::vector<bool> present(k, false);
      for (std::uint32_t i : samples[m].indices) present[train.label(i)] = true;
      if (std::count(present.begin(), present.end(), true) >= 2) break;
      if (attempt >= 8) throw std::runtime_error("cannot draw a trainable ensemble sample");
      std::vector<double> nudged(k);
      for (std::size_t c = 0; c < k; ++c)
        nudged[c] = 0.8 * target[c] + 0.2 / static_cast<double>(k);
      target = PrevalenceVector(std::move(nudged));
    }
    const LabelledCollection member_train = train.subset(samples[m]);
    auto cv = cross_val_confusion(member_train, C, kConfusionFolds, ConfusionMode::kSoft,
                                  member_seed, config, /*allow_absent_classes=*/true);
    members.push_back(EnsembleMember{train_lr(member_train, C, member_seed, config),
                                     std::move(cv.rates), prevalence(member_train), 0.0,
                                     samples[m]});
  }

  // Score every member against every training sample (mean AE); the AE
  // policy keeps the best half statically.
  std::vector<PrevalenceVector> realized;
  realized.reserve(n);
  for (std::size_t s = 0; s < n; ++s) realized.push_back(prevalence(train, samples[s]));
  for (std::size_t m = 0; m < n; ++m) {
    const PosteriorMatrix posteriors = predict_proba(members[m].model, train.documents());
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const PrevalenceVector est =
          solve_adjustment(members[m].rates, pcc_from_rows(posteriors, samples[s].indices));
      total += ae(realized[s], est);
    }
    members[m].training_error = total / static_cast<double>(n);
  }

  if (policy == EnsemblePolicy::kAE) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return members[a].training_error < members[b].training_error;
    });
    order.resize(n / 2);
    std::sort(order.begin(), order.end());
    std::vector<EnsembleMember> kept;
    kept.reserve(order.size());
    for (std::size_t m : order) kept.push_back(std::move(members[m]));
    members = std::move(kept);
  }

  return Quantifier(policy == EnsemblePolicy::kPtr ? Method::kEnsemblePtr : Method::kEnsembleAE,
                    train.codeframe(), Quantifier::EnsembleState{policy, std::move(members)});
}

namespace {

void save_prevalence(std::ostream& out, const PrevalenceVector& p) {
  out << p.size();
  for (std::size_t i = 0; i < p.size(); ++i) out << ' ' << p[i];
  out << '\n';
}

PrevalenceVector load_prevalence(std::istream& in) {
  std::size_t n = 0;
  in >> n;
  std::vector<double> values(n);
  for (auto& v : values) in >> v;
  return PrevalenceVector(std::move(values));
}

void save_rates(std::ostream& out, const ConfusionRates& rates) {
  out << rates.classes();
  for (double v : rates.row_major()) out << ' ' << v;
  out << '\n';
}

ConfusionRates load_rates(std::istream& in) {
  std::size_t k = 0;
  in >> k;
  std::vector<double> data(k * k);
  for (auto& v : data) in >> v;
  return ConfusionRates::column_normalized(data, k);
}

void save_hists(std::ostream& out, const std::vector<std::vector<std::vector<double>>>& hists) {
  out << hists.size() << '\n';
  for (const auto& per_class : hists) {
    out << per_class.size() << '\n';
    for (const auto& hist : per_class) {
      out << hist.size();
      for (double v : hist) out << ' ' << v;
      out << '\n';
    }
  }
}

std::vector<std::vector<std::vector<double>>> load_hists(std::istream& in) {
  std::size_t n_classes = 0;
  in >> n_classes;
  std::vector<std::vector<std::vector<double>>> hists(n_classes);
  for (auto& per_class : hists) {
    std::size_t n_cfg = 0;
    in >> n_cfg;
    per_class.resize(n_cfg);
    for (auto& hist : per_class) {
      std::size_t bins = 0;
      in >> bins;
      hist.resize(bins);
      for (auto& v : hist) in >> v;
    }
  }
  return hists;
}

}  // namespace

void Quantifier::save(std::ostream& out) const {
  out.precision(17);
  out << "quantbench-quantifier 1\n";
  out << "method " << method_name(method_) << '\n';
  switch (method_) {
    case Method::kCC:
    case Method::kPCC:
      std::get<ClassifyState>(state_).model.save(out);
      break;
    case Method::kACC:
    case Method::kPACC: {
      const auto& s = std::get<AdjustedState>(state_);
      save_rates(out, s.rates);
      s.model.save(out);
      break;
    }
    case Method::kSLD: {
      const auto& s = std::get<SldState>(state_);
      save_prevalence(out, s.prior);
      out << s.config.epsilon << ' ' << s.config.max_iter << '\n';
      s.model.save(out);
      break;
    }
    case Method::kHDy: {
      const auto& s = std::get<HdyState>(state_);
      save_hists(out, s.positive_hists);
      save_hists(out, s.negative_hists);
      s.model.save(out);
      break;
    }
    case Method::kMLPE: {
      out << codeframe_.size();
      for (const auto& l : codeframe_.labels()) out << ' ' << l;
      out << '\n';
      save_prevalence(out, std::get<MlpeState>(state_).prior);
      break;
    }
    case Method::kEnsemblePtr:
    case Method::kEnsembleAE: {
      const auto& s = std::get<EnsembleState>(state_);
      out << s.members.size() << '\n';
      for (const auto& m : s.members) {
        save_rates(out, m.rates);
        save_prevalence(out, m.training_prevalence);
        out << m.training_error << '\n';
        out << m.sample.indices.size();
        for (std::uint32_t idx : m.sample.indices) out << ' ' << idx;
        out << '\n';
        m.model.save(out);
      }
      break;
    }
  }
}

Quantifier Quantifier::load(std::istream& in) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "quantbench-quantifier" || version != 1)
    throw std::runtime_error("unrecognized quantifier format");
  std::string key, name;
  in >> key >> name;
  if (key != "method") throw std::runtime_error("malformed quantifier file");
  const Method method = method_from_name(name);
  switch (method) {
    case Method::kCC:
    case Method::kPCC: {
      LogisticModel model = LogisticModel::load(in);
      Codeframe cf = model.codeframe();
      return Quantifier(method, std::move(cf), ClassifyState{std::move(model)});
    }
    case Method::kACC:
    case Method::kPACC: {
      ConfusionRates rates = load_rates(in);
      LogisticModel model = LogisticModel::load(in);
      Codeframe cf = model.codeframe();
      return Quantifier(method, std::move(cf), AdjustedState{std::move(model), std::move(rates)});
    }
    case Method::kSLD: {
      PrevalenceVector prior = load_prevalence(in);
      SldConfig cfg;
      in >> cfg.epsilon >> cfg.max_iter;
      LogisticModel model = LogisticModel::load(in);
      Codeframe cf = model.codeframe();
      return Quantifier(method, std::move(cf),
                        SldState{std::move(model), std::move(prior), cfg});
    }
    case Method::kHDy: {
      auto pos = load_hists(in);
      auto neg = load_hists(in);
      LogisticModel model = LogisticModel::load(in);
      Codeframe cf = model.codeframe();
      return Quantifier(method, std::move(cf),
                        HdyState{std::move(model), std::move(pos), std::move(neg)});
    }
    case Method::kMLPE: {
      std::size_t n_labels = 0;
      in >> n_labels;
      std::vector<std::string> labels(n_labels);
      for (auto& l : labels) in >> l;
      PrevalenceVector prior = load_prevalence(in);
      return Quantifier(method, Codeframe(std::move(labels)), MlpeState{std::move(prior)});
    }
    case Method::kEnsemblePtr:
    case Method::kEnsembleAE: {
      std::size_t count = 0;
      in >> count;
      std::vector<EnsembleMember> members;
      members.reserve(count);
      for (std::size_t m = 0; m < count; ++m) {
        ConfusionRates rates = load_rates(in);
        PrevalenceVector prev = load_prevalence(in);
        double err = 0.0;
        in >> err;
        SampleIndices sample;
        std::size_t n_idx = 0;
        in >> n_idx;
        sample.indices.resize(n_idx);
        for (auto& idx : sample.indices) in >> idx;
        LogisticModel model = LogisticModel::load(in);
        members.push_back(EnsembleMember{std::move(model), std::move(rates), std::move(prev), err,
                                         std::move(sample)});
      }
      if (members.empty()) throw std::runtime_error("empty ensemble");
      Codeframe cf = members.front().model.codeframe();
      const EnsemblePolicy policy =
          method == Method::kEnsemblePtr ? EnsemblePolicy::kPtr : EnsemblePolicy::kAE;
      return Quantifier(method, std::move(cf), EnsembleState{policy, std::move(members)});
    }
  }
  throw std::logic_error("unknown method");
}

}  // namespace quantbench
