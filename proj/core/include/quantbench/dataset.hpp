#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "quantbench/types.hpp"

namespace quantbench {

// Raised for malformed dataset files; the message carries the file and line.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A dataset: train / held-out validation / test splits over one codeframe
// and one feature space.
struct DatasetBundle {
  std::string name;
  LabelledCollection train;
  LabelledCollection validation;
  LabelledCollection test;

  const Codeframe& codeframe() const { return train.codeframe(); }
};

// Sparse vector file format, one document per line:
//   <label><TAB>f:v( f:v)*
// where label is one of positive/neutral/negative (case-insensitive) or an
// integer resolved through a label map. Blank lines are ignored and lines
// starting with '#' are comments. Feature indices are non-negative integers,
// values are decimal reals.
LabelledCollection load_collection(const std::filesystem::path& file,
                                   const std::optional<std::filesystem::path>& label_map = {});

void save_collection(std::ostream& out, const LabelledCollection& collection);
void save_collection(const std::filesystem::path& file, const LabelledCollection& collection);

DatasetBundle load_dataset(const std::filesystem::path& train_path,
                           const std::filesystem::path& validation_path,
                           const std::filesystem::path& test_path, const std::string& name,
                           const std::optional<std::filesystem::path>& label_map = {});

// Dataset manifest: a key-value text file. Keys for on-disk datasets:
//   name, train, validation, test, label_map (optional).
// Alternatively a synthetic dataset is declared with:
//   name, synthetic=true, classes, features, train_size, validation_size,
//   test_size, class_separation, seed.
// Relative paths are resolved against the manifest's directory.
DatasetBundle load_manifest(const std::filesystem::path& manifest);

// Drops every feature whose training document frequency is below min_df,
// compacting the remaining feature indices in all three splits. Documents
// that lose all features are kept with empty entry lists.
DatasetBundle feature_select(const DatasetBundle& bundle, std::size_t min_df);

// Desk-scale synthetic data. Per-class sparse feature distributions whose
// overlap shrinks as class_separation approaches 1: at 1 the classes use
// disjoint feature blocks, at 0 all classes share one distribution.
// Deterministic under a fixed seed.
struct SyntheticSpec {
  Codeframe codeframe;
  std::size_t n_features = 60;
  std::size_t train_size = 300;
  std::size_t validation_size = 150;
  std::size_t test_size = 300;
  double class_separation = 1.0;
  std::uint64_t seed = 0;
};

DatasetBundle synthesize_dataset(const SyntheticSpec& spec, const std::string& name = "synthetic");

}  // namespace quantbench
