#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace quantbench {

// Ordered set of class labels. The ordering is fixed at construction and
// drives all vector indexing throughout the library.
class Codeframe {
 public:
  explicit Codeframe(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::string>& labels() const { return labels_; }

  // Index of a label, or -1 when absent.
  int index_of(const std::string& label) const;

  bool operator==(const Codeframe& other) const { return labels_ == other.labels_; }

  // The ternary sentiment codeframe used by the tweet datasets.
  static Codeframe ternary_sentiment();

 private:
  std::vector<std::string> labels_;
};

// Sparse feature vector: (feature index, value) pairs with strictly
// increasing indices and no explicit zeros.
class SparseDocument {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  SparseDocument() = default;
  explicit SparseDocument(std::vector<Entry> entries);

  // Accepts unsorted input, merges duplicate indices, drops zeros.
  static SparseDocument from_unsorted(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::uint32_t max_feature() const {
    return entries_.empty() ? 0 : entries_.back().first;
  }

  bool operator==(const SparseDocument& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Entry> entries_;
};

// A probability distribution over a codeframe. Sums within 1e-6 of one are
// renormalized at construction; larger violations are errors. Downstream
// consumers can rely on sum == 1 within 1e-9.
class PrevalenceVector {
 public:
  explicit PrevalenceVector(std::vector<double> values);

  static PrevalenceVector uniform(std::size_t n_classes);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const PrevalenceVector& other) const { return values_ == other.values_; }

 private:
  std::vector<double> values_;
};

// Positions into a parent collection; duplicates are permitted when the
// sample was drawn with replacement.
struct SampleIndices {
  std::vector<std::uint32_t> indices;

  std::size_t size() const { return indices.size(); }
  void check_bounds(std::size_t pool_size) const;
};

// Immutable set of labelled sparse documents over a codeframe. Safe to share
// read-only across threads.
class LabelledCollection {
 public:
  LabelledCollection(std::vector<SparseDocument> documents,
                     std::vector<std::uint32_t> labels, Codeframe codeframe);

  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }
  const Codeframe& codeframe() const { return codeframe_; }
  std::span<const SparseDocument> documents() const { return documents_; }
  const SparseDocument& document(std::size_t i) const { return documents_[i]; }
  std::uint32_t label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::uint32_t>& labels() const { return labels_; }

  // Highest feature index across all documents, plus one.
  std::uint32_t feature_dimension() const { return feature_dim_; }

  std::vector<std::size_t> label_counts() const;

  // Document positions grouped by class, in document order.
  std::vector<std::vector<std::uint32_t>> indices_by_class() const;

  // Materializes a sample as its own collection (documents are copied).
  LabelledCollection subset(const SampleIndices& sample) const;

  // Concatenation; both operands must share the codeframe.
  static LabelledCollection concat(const LabelledCollection& a, const LabelledCollection& b);

 private:
  std::vector<SparseDocument> documents_;
  std::vector<std::uint32_t> labels_;
  Codeframe codeframe_;
  std::uint32_t feature_dim_ = 0;
};

// True class prevalence of a collection. Errors on an empty sample.
PrevalenceVector prevalence(const LabelledCollection& collection);

// Prevalence of the sample designated by indices into a parent collection.
PrevalenceVector prevalence(const LabelledCollection& parent, const SampleIndices& sample);

PrevalenceVector uniform_prevalence(const Codeframe& codeframe);

}  // namespace quantbench
