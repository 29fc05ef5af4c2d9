#include "quantbench/model_selection.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "quantbench/metrics.hpp"
#include "quantbench/rng.hpp"

namespace quantbench {

std::string loss_name(Loss loss) { return loss == Loss::kAE ? "ae" : "rae"; }

Loss loss_from_name(const std::string& name) {
  std::string n;
  for (char c : name) n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (n == "ae") return Loss::kAE;
  if (n == "rae") return Loss::kRAE;
  throw std::invalid_argument("unknown loss: " + name);
}

std::vector<double> c_grid() {
  std::vector<double> grid;
  for (int i = -4; i <= 5; ++i) grid.push_back(std::pow(10.0, i));
  return grid;
}

double evaluate_on_samples(const Quantifier& q, const LabelledCollection& pool,
                           const AppSamples& samples, Loss loss) {
  if (samples.size() == 0) throw std::invalid_argument("empty sample stream");
  const PoolCache cache = q.prepare(pool.documents());
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SampleIndices idx = samples.sample(i);
    const PrevalenceVector realized = prevalence(pool, idx);
    const PrevalenceVector estimated = q.estimate(cache, idx);
    total += loss == Loss::kAE ? ae(realized, estimated)
                               : rae(realized, estimated, idx.size());
  }
  return total / static_cast<double>(samples.size());
}

GridSearchResult select_C(Method method, const LabelledCollection& train,
                          const LabelledCollection& validation, Loss loss,
                          const SamplingPlan& plan, std::uint64_t seed,
                          const PrevalenceGrid& grid, const LrConfig& config,
                          const EnsembleParams& ensemble, int jobs) {
  if (validation.empty()) throw std::invalid_argument("empty validation set");
  SamplingPlan val_plan = plan;
  val_plan.seed = mix_seed(seed, 0xC5E1ull, 0);
  const AppSamples samples(validation, val_plan, grid);

  const std::vector<double> cs = c_grid();
  std::vector<double> scores(cs.size());
  std::exception_ptr error;
  std::mutex error_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cs.size()) break;
      try {
        const Quantifier q = fit(method, train, cs[i], seed, config, ensemble);
        scores[i] = evaluate_on_samples(q, validation, samples, loss);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(cs.size());
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(jobs, static_cast<int>(cs.size()));
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  GridSearchResult result;
  result.target_loss = loss;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    result.scores.emplace_back(cs[i], scores[i]);
    // Strictly-less keeps the first (smaller) C on ties.
    if (scores[i] < best_score) {
      best_score = scores[i];
      result.best_C = cs[i];
    }
  }
  return result;
}

}  // namespace quantbench
