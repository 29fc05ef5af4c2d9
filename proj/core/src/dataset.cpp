#include "quantbench/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "quantbench/rng.hpp"

namespace quantbench {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Canonical ordering when all labels are sentiment names.
const std::vector<std::string> kSentimentOrder = {"positive", "neutral", "negative"};

bool is_sentiment_label(const std::string& l) {
  return std::find(kSentimentOrder.begin(), kSentimentOrder.end(), l) != kSentimentOrder.end();
}

std::unordered_map<std::string, std::string> read_label_map(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open label map: " + file.string());
  std::unordered_map<std::string, std::string> map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key, value;
    if (!(ss >> key >> value))
      throw ParseError(file.string() + ":" + std::to_string(lineno) + ": malformed label map line");
    map[key] = lower(value);
  }
  return map;
}

[[noreturn]] void parse_fail(const std::filesystem::path& file, std::size_t lineno,
                             const std::string& what) {
  throw ParseError(file.string() + ":" + std::to_string(lineno) + ": " + what);
}

}  // namespace

LabelledCollection load_collection(const std::filesystem::path& file,
                                   const std::optional<std::filesystem::path>& label_map) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open dataset file: " + file.string());

  std::unordered_map<std::string, std::string> map;
  if (label_map) map = read_label_map(*label_map);

  std::vector<SparseDocument> docs;
  std::vector<std::string> doc_labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;

    const std::size_t tab = line.find('\t');
    std::string label_token = tab == std::string::npos ? stripped : trim(line.substr(0, tab));
    // Tolerate space-separated label tokens as well as the canonical TAB.
    std::string rest;
    if (tab != std::string::npos) {
      rest = line.substr(tab + 1);
    } else {
      const std::size_t sp = stripped.find(' ');
      if (sp != std::string::npos) {
        label_token = stripped.substr(0, sp);
        rest = stripped.substr(sp + 1);
      } else {
        rest = "";
      }
    }
    if (label_token.empty()) parse_fail(file, lineno, "missing label");

    std::string label = lower(label_token);
    if (auto it = map.find(label_token); it != map.end()) label = it->second;
    if (!is_sentiment_label(label) && map.empty()) {
      // Numeric labels require a map; anything else is unknown.
      parse_fail(file, lineno, "unknown label '" + label_token + "'");
    }
    if (!is_sentiment_label(label))
      parse_fail(file, lineno, "label map does not resolve '" + label_token + "'");

    std::vector<SparseDocument::Entry> entries;
    std::istringstream fs(rest);
    std::string tok;
    while (fs >> tok) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 >= tok.size())
        parse_fail(file, lineno, "malformed feature token '" + tok + "'");
      std::uint32_t idx = 0;
      const char* first = tok.data();
      auto [p, ec] = std::from_chars(first, first + colon, idx);
      if (ec != std::errc() || p != first + colon)
        parse_fail(file, lineno, "malformed feature index in '" + tok + "'");
      char* endp = nullptr;
      const double value = std::strtod(tok.c_str() + colon + 1, &endp);
      if (endp != tok.c_str() + tok.size() || !std::isfinite(value))
        parse_fail(file, lineno, "malformed feature value in '" + tok + "'");
      if (value != 0.0) entries.emplace_back(idx, value);
    }
    try {
      docs.push_back(SparseDocument::from_unsorted(std::move(entries)));
    } catch (const std::exception& e) {
      parse_fail(file, lineno, e.what());
    }
    doc_labels.push_back(label);
  }

  if (docs.empty()) throw ParseError(file.string() + ": empty split");

  Codeframe codeframe = Codeframe::ternary_sentiment();
  std::vector<std::uint32_t> labels;
  labels.reserve(doc_labels.size());
  for (const auto& l : doc_labels)
    labels.push_back(static_cast<std::uint32_t>(codeframe.index_of(l)));
  return LabelledCollection(std::move(docs), std::move(labels), std::move(codeframe));
}

void save_collection(std::ostream& out, const LabelledCollection& collection) {
  out.precision(17);
  for (std::size_t i = 0; i < collection.size(); ++i) {
    out << collection.codeframe().label(collection.label(i));
    char sep = '\t';
    for (const auto& [f, v] : collection.document(i).entries()) {
      out << sep << f << ':' << v;
      sep = ' ';
    }
    out << '\n';
  }
}

void save_collection(const std::filesystem::path& file, const LabelledCollection& collection) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  save_collection(out, collection);
}

DatasetBundle load_dataset(const std::filesystem::path& train_path,
                           const std::filesystem::path& validation_path,
                           const std::filesystem::path& test_path, const std::string& name,
                           const std::optional<std::filesystem::path>& label_map) {
  DatasetBundle bundle{name, load_collection(train_path, label_map),
                       load_collection(validation_path, label_map),
                       load_collection(test_path, label_map)};
  return bundle;
}

namespace {

std::map<std::string, std::string> read_keyvalue_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open manifest: " + file.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::size_t sep = stripped.find('=');
    if (sep == std::string::npos) sep = stripped.find(' ');
    if (sep == std::string::npos)
      throw ParseError(file.string() + ":" + std::to_string(lineno) + ": expected 'key value'");
    kv[trim(stripped.substr(0, sep))] = trim(stripped.substr(sep + 1));
  }
  return kv;
}

std::size_t to_size(const std::string& s, const std::string& key) {
  try {
    return static_cast<std::size_t>(std::stoull(s));
  } catch (...) {
    throw ParseError("manifest key '" + key + "' is not a non-negative integer: " + s);
  }
}

}  // namespace

DatasetBundle load_manifest(const std::filesystem::path& manifest) {
  const auto kv = read_keyvalue_file(manifest);
  const auto dir = manifest.parent_path();
  auto get = [&](const std::string& key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(manifest.string() + ": missing manifest key '" + key + "'");
    return it->second;
  };
  const std::string name = get("name");

  if (auto it = kv.find("synthetic"); it != kv.end() && lower(it->second) == "true") {
    SyntheticSpec spec{Codeframe::ternary_sentiment()};
    if (kv.count("features")) spec.n_features = to_size(kv.at("features"), "features");
    if (kv.count("train_size")) spec.train_size = to_size(kv.at("train_size"), "train_size");
    if (kv.count("validation_size"))
      spec.validation_size = to_size(kv.at("validation_size"), "validation_size");
    if (kv.count("test_size")) spec.test_size = to_size(kv.at("test_size"), "test_size");
    if (kv.count("class_separation")) spec.class_separation = std::stod(kv.at("class_separation"));
    if (kv.count("seed")) spec.seed = std::stoull(kv.at("seed"));
    return synthesize_dataset(spec, name);
  }

  std::optional<std::filesystem::path> label_map;
  if (kv.count("label_map")) label_map = dir / kv.at("label_map");
  return load_dataset(dir / get("train"), dir / get("validation"), dir / get("test"), name,
                      label_map);
}

namespace {

// Document frequency of every feature over the training split.
std::unordered_map<std::uint32_t, std::size_t> train_document_frequency(
    const LabelledCollection& train) {
  std::unordered_map<std::uint32_t, std::size_t> df;
  for (const auto& doc : train.documents())
    for (const auto& [f, v] : doc.entries()) ++df[f];
  return df;
}

LabelledCollection remap_features(const LabelledCollection& split,
                                  const std::unordered_map<std::uint32_t, std::uint32_t>& remap) {
  std::vector<SparseDocument> docs;
  docs.reserve(split.size());
  for (const auto& doc : split.documents()) {
    std::vector<SparseDocument::Entry> entries;
    for (const auto& [f, v] : doc.entries())
      if (auto it = remap.find(f); it != remap.end()) entries.emplace_back(it->second, v);
    docs.push_back(SparseDocument(std::move(entries)));
  }
  return LabelledCollection(std::move(docs), std::vector<std::uint32_t>(split.labels()),
                            split.codeframe());
}

}  // namespace

DatasetBundle feature_select(const DatasetBundle& bundle, std::size_t min_df) {
  if (min_df < 1) throw std::invalid_argument("min_df must be >= 1");
  const auto df = train_document_frequency(bundle.train);
  std::vector<std::uint32_t> kept;
  kept.reserve(df.size());
  for (const auto& [f, count] : df)
    if (count >= min_df) kept.push_back(f);
  std::sort(kept.begin(), kept.end());
  std::unordered_map<std::uint32_t, std::uint32_t> remap;
  remap.reserve(kept.size());
  for (std::uint32_t i = 0; i < kept.size(); ++i) remap[kept[i]] = i;
  return DatasetBundle{bundle.name, remap_features(bundle.train, remap),
                       remap_features(bundle.validation, remap),
                       remap_features(bundle.test, remap)};
}

namespace {

// One synthetic document: a handful of feature occurrences, each drawn from
// the class block with probability `separation` and from the shared pool
// otherwise. Values are small positive counts.
SparseDocument synth_document(Rng& rng, std::size_t cls, const SyntheticSpec& spec) {
  const std::size_t k = spec.codeframe.size();
  const std::size_t block = spec.n_features / k;
  const std::size_t occurrences = 5 + rng.next_below(8);
  std::vector<SparseDocument::Entry> entries;
  for (std::size_t i = 0; i < occurrences; ++i) {
    std::uint32_t f;
    if (rng.next_double() < spec.class_separation) {
      f = static_cast<std::uint32_t>(cls * block + rng.next_below(block));
    } else {
      f = static_cast<std::uint32_t>(rng.next_below(spec.n_features));
    }
    entries.emplace_back(f, 1.0 + static_cast<double>(rng.next_below(3)));
  }
  return SparseDocument::from_unsorted(std::move(entries));
}

LabelledCollection synth_split(Rng& rng, std::size_t size, const SyntheticSpec& spec) {
  const std::size_t k = spec.codeframe.size();
  std::vector<SparseDocument> docs;
  std::vector<std::uint32_t> labels;
  docs.reserve(size);
  labels.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    const std::uint32_t cls = static_cast<std::uint32_t>(i % k);
    docs.push_back(synth_document(rng, cls, spec));
    labels.push_back(cls);
  }
  return LabelledCollection(std::move(docs), std::move(labels), spec.codeframe);
}

}  // namespace

DatasetBundle synthesize_dataset(const SyntheticSpec& spec, const std::string& name) {
  const std::size_t k = spec.codeframe.size();
  if (spec.train_size < k || spec.validation_size < k || spec.test_size < k)
    throw std::invalid_argument("split sizes must each cover the codeframe");
  if (spec.n_features < k) throw std::invalid_argument("need at least one feature per class");
  if (spec.class_separation < 0.0 || spec.class_separation > 1.0)
    throw std::invalid_argument("class_separation must be in [0, 1]");
  Rng rng(spec.seed);
  LabelledCollection train = synth_split(rng, spec.train_size, spec);
  LabelledCollection validation = synth_split(rng, spec.validation_size, spec);
  LabelledCollection test = synth_split(rng, spec.test_size, spec);
  return DatasetBundle{name, std::move(train), std::move(validation), std::move(test)};
}

}  // namespace quantbench
