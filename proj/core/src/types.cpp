#include "quantbench/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "quantbench/rng.hpp"

namespace quantbench {

Codeframe::Codeframe(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) throw std::invalid_argument("codeframe needs at least 2 classes");
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second)
      throw std::invalid_argument("duplicate class label: " + l);
  }
}

int Codeframe::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return static_cast<int>(i);
  return -1;
}

Codeframe Codeframe::ternary_sentiment() {
  return Codeframe({"positive", "neutral", "negative"});
}

SparseDocument::SparseDocument(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].second == 0.0)
      throw std::invalid_argument("explicit zero value in sparse document");
    if (i > 0 && entries_[i].first <= entries_[i - 1].first)
      throw std::invalid_argument("feature indices must be strictly increasing");
  }
}

SparseDocument SparseDocument::from_unsorted(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  std::vector<Entry> merged;
  merged.reserve(entries.size());
  for (const auto& e : entries) {
    if (!merged.empty() && merged.back().first == e.first)
      merged.back().second += e.second;
    else
      merged.push_back(e);
  }
  std::erase_if(merged, [](const Entry& e) { return e.second == 0.0; });
  return SparseDocument(std::move(merged));
}

namespace {
constexpr double kSumHardTolerance = 1e-6;
}

PrevalenceVector::PrevalenceVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("empty prevalence vector");
  double sum = 0.0;
  for (double& v : values_) {
    if (v < 0.0) {
      if (v < -1e-9) throw std::invalid_argument("negative prevalence value");
      v = 0.0;
    }
    if (v > 1.0 + kSumHardTolerance)
      throw std::invalid_argument("prevalence value exceeds 1");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumHardTolerance)
    throw std::invalid_argument("prevalence values do not sum to 1");
  for (double& v : values_) v /= sum;
}

PrevalenceVector PrevalenceVector::uniform(std::size_t n_classes) {
  if (n_classes == 0) throw std::invalid_argument("empty prevalence vector");
  return PrevalenceVector(std::vector<double>(n_classes, 1.0 / static_cast<double>(n_classes)));
}

void SampleIndices::check_bounds(std::size_t pool_size) const {
  for (std::uint32_t i : indices)
    if (i >= pool_size) throw std::out_of_range("sample index out of range");
}

LabelledCollection::LabelledCollection(std::vector<SparseDocument> documents,
                                       std::vector<std::uint32_t> labels,
                                       Codeframe codeframe)
    : documents_(std::move(documents)),
      labels_(std::move(labels)),
      codeframe_(std::move(codeframe)) {
  if (documents_.size() != labels_.size())
    throw std::invalid_argument("documents/labels size mismatch");
  for (std::uint32_t l : labels_)
    if (l >= codeframe_.size()) throw std::invalid_argument("label index out of codeframe");
  for (const auto& d : documents_)
    if (!d.empty()) feature_dim_ = std::max(feature_dim_, d.max_feature() + 1);
}

std::vector<std::size_t> LabelledCollection::label_counts() const {
  std::vector<std::size_t> counts(codeframe_.size(), 0);
  for (std::uint32_t l : labels_) ++counts[l];
  return counts;
}

std::vector<std::vector<std::uint32_t>> LabelledCollection::indices_by_class() const {
  std::vector<std::vector<std::uint32_t>> by_class(codeframe_.size());
  for (std::uint32_t i = 0; i < labels_.size(); ++i)
    by_class[labels_[i]].push_back(i);
  return by_class;
}

LabelledCollection LabelledCollection::subset(const SampleIndices& sample) const {
  sample.check_bounds(size());
  std::vector<SparseDocument> docs;
  std::vector<std::uint32_t> labels;
  docs.reserve(sample.size());
  labels.reserve(sample.size());
  for (std::uint32_t i : sample.indices) {
    docs.push_back(documents_[i]);
    labels.push_back(labels_[i]);
  }
  return LabelledCollection(std::move(docs), std::move(labels), codeframe_);
}

LabelledCollection LabelledCollection::concat(const LabelledCollection& a,
                                              const LabelledCollection& b) {
  if (!(a.codeframe() == b.codeframe()))
    throw std::invalid_argument("cannot concatenate collections over different codeframes");
  std::vector<SparseDocument> docs(a.documents_.begin(), a.documents_.end());
  docs.insert(docs.end(), b.documents_.begin(), b.documents_.end());
  std::vector<std::uint32_t> labels(a.labels_.begin(), a.labels_.end());
  labels.insert(labels.end(), b.labels_.begin(), b.labels_.end());
  return LabelledCollection(std::move(docs), std::move(labels), a.codeframe_);
}

PrevalenceVector prevalence(const LabelledCollection& collection) {
  if (collection.empty()) throw std::invalid_argument("empty sample");
  const auto counts = collection.label_counts();
  std::vector<double> values(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    values[i] = static_cast<double>(counts[i]) / static_cast<double>(collection.size());
  return PrevalenceVector(std::move(values));
}

PrevalenceVector prevalence(const LabelledCollection& parent, const SampleIndices& sample) {
  if (sample.indices.empty()) throw std::invalid_argument("empty sample");
  sample.check_bounds(parent.size());
  std::vector<double> values(parent.codeframe().size(), 0.0);
  for (std::uint32_t i : sample.indices) values[parent.label(i)] += 1.0;
  for (double& v : values) v /= static_cast<double>(sample.size());
  return PrevalenceVector(std::move(values));
}

PrevalenceVector uniform_prevalence(const Codeframe& codeframe) {
  return PrevalenceVector::uniform(codeframe.size());
}

std::vector<double> random_simplex_point(Rng& rng, std::size_t k) {
  std::vector<double> p(k);
  double sum = 0.0;
  for (double& v : p) {
    double u = rng.next_double();
    if (u <= 0.0) u = 0x1.0p-53;
    v = -std::log(u);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace quantbench
