#include "quantbench/report_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "quantbench/dataset.hpp"

namespace quantbench {

namespace {

std::string format_prevalence(const PrevalenceVector& p) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) ss << ';';
    ss << p[i];
  }
  return ss.str();
}

PrevalenceVector parse_prevalence(const std::string& s, std::size_t lineno) {
  std::vector<double> values;
  std::stringstream ss(s);
  std::string tok;
  double sum = 0.0;
  while (std::getline(ss, tok, ';')) {
    values.push_back(std::stod(tok));
    sum += values.back();
  }
  // The file stores 6 decimal digits per entry; rounding can leave the sum
  // off by a few 1e-6, which the strict constructor would reject.
  if (std::abs(sum - 1.0) > 1e-3 || sum <= 0.0)
    throw ParseError("records.csv:" + std::to_string(lineno) + ": prevalences do not sum to 1");
  for (double& v : values) v /= sum;
  try {
    return PrevalenceVector(std::move(values));
  } catch (const std::exception& e) {
    throw ParseError("records.csv:" + std::to_string(lineno) + ": " + e.what());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) fields.push_back(tok);
  return fields;
}

const char* significance_token(Significance s) {
  switch (s) {
    case Significance::kBest: return "best";
    case Significance::kIndistinct: return "p>=0.05";
    case Significance::kWeaklyDistinct: return "0.001<p<0.05";
    case Significance::kDistinct: return "p<=0.001";
  }
  return "";
}

}  // namespace

void write_records_csv(std::ostream& out, std::span<const ExperimentRecord> records) {
  out << "dataset,method,loss_target,grid_point,replicate,target_prev,realized_prev,"
         "estimated_prev,shift,ae,rae\n";
  out << std::setprecision(17);
  for (const auto& r : records) {
    out << r.dataset << ',' << r.method << ',' << loss_name(r.loss_target) << ','
        << r.grid_point << ',' << r.replicate << ',' << format_prevalence(r.target_prev) << ','
        << format_prevalence(r.realized_prev) << ',' << format_prevalence(r.estimated_prev)
        << ',' << r.shift << ',' << r.ae << ',' << r.rae << '\n';
  }
}

void write_records_csv(const std::filesystem::path& file,
                       std::span<const ExperimentRecord> records) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  write_records_csv(out, records);
}

std::vector<ExperimentRecord> read_records_csv(std::istream& in) {
  std::vector<ExperimentRecord> records;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("dataset,", 0) == 0) continue;  // header row
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 11)
      throw ParseError("records.csv:" + std::to_string(lineno) + ": expected 11 columns, got " +
                       std::to_string(fields.size()));
    try {
      ExperimentRecord r{fields[0],
                         fields[1],
                         loss_from_name(fields[2]),
                         std::stoull(fields[3]),
                         std::stoull(fields[4]),
                         parse_prevalence(fields[5], lineno),
                         parse_prevalence(fields[6], lineno),
                         parse_prevalence(fields[7], lineno),
                         std::stod(fields[8]),
                         std::stod(fields[9]),
                         std::stod(fields[10])};
      records.push_back(std::move(r));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError("records.csv:" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (records.empty()) throw ParseError("records.csv: no records");
  return records;
}

std::vector<ExperimentRecord> read_records_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open " + file.string());
  return read_records_csv(in);
}

void write_comparison_csv(std::ostream& out, const ComparisonReport& report) {
  out << "dataset,method,mean_" << loss_name(report.measure)
      << ",n,rank,best,significance,color_score,tied_best\n";
  out << std::setprecision(12);
  auto emit_row = [&](const std::string& dataset, const std::vector<ComparisonCell>& row,
                      bool tied) {
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
      const auto& cell = row[m];
      if (cell.n == 0) continue;
      out << dataset << ',' << report.methods[m] << ',' << cell.mean_error << ',' << cell.n
          << ',' << cell.rank << ',' << (cell.best ? 1 : 0) << ','
          << significance_token(cell.significance) << ',' << cell.color_score << ','
          << (tied ? 1 : 0) << '\n';
    }
  };
  for (std::size_t d = 0; d < report.datasets.size(); ++d)
    emit_row(report.datasets[d], report.cells[d], report.tie_flag[d]);
  emit_row("AVERAGE", report.average_row, false);
}

void write_ranks_csv(std::ostream& out, const ComparisonReport& report) {
  out << "dataset,method,rank\n";
  for (std::size_t d = 0; d < report.datasets.size(); ++d)
    for (std::size_t m = 0; m < report.methods.size(); ++m)
      if (report.cells[d][m].n > 0)
        out << report.datasets[d] << ',' << report.methods[m] << ',' << report.cells[d][m].rank
            << '\n';
  out << std::setprecision(4);
  for (std::size_t m = 0; m < report.methods.size(); ++m)
    out << "AVERAGE," << report.methods[m] << ',' << report.average_ranks[m] << '\n';
}

void write_shiftbins_csv(std::ostream& out, std::span<const ShiftBin> bins) {
  out << "bin_lo,bin_hi,method,mean_error,records,samples\n";
  out << std::setprecision(12);
  for (const auto& bin : bins)
    for (const auto& [method, mean] : bin.mean_error)
      out << bin.lo << ',' << bin.hi << ',' << method << ',' << mean << ','
          << bin.count.at(method) << ',' << bin.samples << '\n';
}

void write_diagonal_csv(std::ostream& out, std::span<const ExperimentRecord> records,
                        std::size_t n_classes) {
  out << "class,true_prev,method,mean_estimated,count\n";
  out << std::setprecision(12);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto points = diagonal_data(records, c);
    for (const auto& point : points)
      for (const auto& [method, mean] : point.mean_estimated)
        out << c << ',' << point.true_prev << ',' << method << ',' << mean << ','
            << point.count.at(method) << '\n';
  }
}

void write_bias_csv(std::ostream& out, std::span<const ExperimentRecord> records,
                    std::size_t n_classes) {
  out << "class,method,min,q1,median,q3,max,outliers,n\n";
  out << std::setprecision(12);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto summaries = bias_data(records, c);
    for (const auto& s : summaries)
      out << c << ',' << s.method << ',' << s.min << ',' << s.q1 << ',' << s.median << ','
          << s.q3 << ',' << s.max << ',' << s.n_outliers << ',' << s.signed_errors.size()
          << '\n';
  }
}

void write_shiftbins_svg(std::ostream& out, std::span<const ShiftBin> bins) {
  constexpr int kWidth = 720, kHeight = 420, kMargin = 50;
  std::vector<std::string> methods;
  double max_error = 0.0, max_shift = 0.0;
  for (const auto& bin : bins) {
    max_shift = std::max(max_shift, bin.hi);
    for (const auto& [method, mean] : bin.mean_error) {
      max_error = std::max(max_error, mean);
      if (std::find(methods.begin(), methods.end(), method) == methods.end())
        methods.push_back(method);
    }
  }
  if (max_error <= 0.0) max_error = 1.0;
  if (max_shift <= 0.0) max_shift = 1.0;

  const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  auto sx = [&](double shift_value) {
    return kMargin + shift_value / max_shift * (kWidth - 2 * kMargin);
  };
  auto sy = [&](double err) { return kHeight - kMargin - err / max_error * (kHeight - 2 * kMargin); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
      << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
      << "\" font-size=\"12\" text-anchor=\"middle\">distribution shift</text>\n";
  out << "<text x=\"14\" y=\"" << kHeight / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << kHeight / 2 << ")\">mean error</text>\n";

  for (std::size_t m = 0; m < methods.size(); ++m) {
    out << "<polyline fill=\"none\" stroke=\"" << palette[m % 10] << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& bin : bins) {
      auto it = bin.mean_error.find(methods[m]);
      if (it == bin.mean_error.end()) continue;
      out << sx((bin.lo + bin.hi) / 2.0) << ',' << sy(it->second) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin + 4 << "\" y=\"" << kMargin + 14 * (m + 1)
        << "\" font-size=\"11\" fill=\"" << palette[m % 10] << "\">" << methods[m] << "</text>\n";
  }
  out << "</svg>\n";
}

void write_metadata_json(std::ostream& out, const RunMetadata& meta) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["seed"] = meta.seed;
  j["loss"] = loss_name(meta.loss);
  j["grid_step"] = meta.grid_step;
  j["m"] = meta.m;
  j["q"] = meta.q;
  j["validation_m"] = meta.validation_m;
  j["min_df"] = meta.min_df;
  j["jobs"] = meta.jobs;
  j["wall_clock_seconds"] = meta.wall_clock_seconds;
  j["ensemble_note"] =
      "ensemble methods reuse the C selected for plain pacc rather than searching per member";
  j["average_row_note"] =
      "the AVERAGE comparison row pools every per-sample pair across datasets; per-dataset "
      "rows pair within the dataset";
  nlohmann::json datasets = nlohmann::json::object();
  for (const auto& [name, infos] : meta.per_dataset) {
    nlohmann::json methods = nlohmann::json::object();
    for (const auto& info : infos) {
      nlohmann::json m;
      m["ok"] = info.ok;
      if (!info.ok) m["error"] = info.error;
      m["best_C"] = info.best_C;
      nlohmann::json scores = nlohmann::json::array();
      for (const auto& [c, score] : info.c_scores) scores.push_back({{"C", c}, {"loss", score}});
      m["c_scores"] = scores;
      m["selection_seconds"] = info.selection_seconds;
      m["evaluation_seconds"] = info.evaluation_seconds;
      methods[info.method] = m;
    }
    datasets[name] = methods;
  }
  j["datasets"] = datasets;
  out << j.dump(2) << '\n';
}

void write_report_files(const std::filesystem::path& dir,
                        std::span<const ExperimentRecord> records, Loss measure) {
  std::filesystem::create_directories(dir);
  std::size_t n_classes = records.empty() ? 0 : records.front().target_prev.size();

  const ComparisonReport report = build_comparison(records, measure);
  {
    std::ofstream out(dir / "comparison.csv");
    write_comparison_csv(out, report);
  }
  {
    std::ofstream out(dir / "ranks.csv");
    write_ranks_csv(out, report);
  }
  const auto bins = shift_bins(records, measure, 0.05);
  {
    std::ofstream out(dir / "shiftbins.csv");
    write_shiftbins_csv(out, bins);
  }
  {
    std::ofstream out(dir / "shiftbins.svg");
    write_shiftbins_svg(out, bins);
  }
  {
    std::ofstream out(dir / "diagonal.csv");
    write_diagonal_csv(out, records, n_classes);
  }
  {
    std::ofstream out(dir / "bias.csv");
    write_bias_csv(out, records, n_classes);
  }
}

}  // namespace quantbench
