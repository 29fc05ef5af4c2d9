#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "quantbench/evaluation.hpp"

namespace quantbench {

inline constexpr const char* kVersion = "0.1.0";

// records.csv: one ExperimentRecord per line. Prevalence vectors are
// semicolon-joined decimals with 6 digits; error columns keep full precision
// so reports regenerated from the file match the in-memory pipeline.
void write_records_csv(std::ostream& out, std::span<const ExperimentRecord> records);
void write_records_csv(const std::filesystem::path& file,
                       std::span<const ExperimentRecord> records);
std::vector<ExperimentRecord> read_records_csv(std::istream& in);
std::vector<ExperimentRecord> read_records_csv(const std::filesystem::path& file);

void write_comparison_csv(std::ostream& out, const ComparisonReport& report);
void write_ranks_csv(std::ostream& out, const ComparisonReport& report);
void write_shiftbins_csv(std::ostream& out, std::span<const ShiftBin> bins);
void write_diagonal_csv(std::ostream& out, std::span<const ExperimentRecord> records,
                        std::size_t n_classes);
void write_bias_csv(std::ostream& out, std::span<const ExperimentRecord> records,
                    std::size_t n_classes);

// Plot-ready line chart of per-method mean error against shift bins.
void write_shiftbins_svg(std::ostream& out, std::span<const ShiftBin> bins);

struct RunMetadata {
  std::uint64_t seed = 0;
  Loss loss = Loss::kAE;
  double grid_step = 0.05;
  std::size_t m = 25, q = 100, validation_m = 5;
  std::size_t min_df = 5;
  int jobs = 0;
  double wall_clock_seconds = 0.0;
  std::vector<std::pair<std::string, std::vector<MethodRunInfo>>> per_dataset;
};

void write_metadata_json(std::ostream& out, const RunMetadata& meta);

// Writes the full report family (comparison, ranks, shiftbins, diagonal,
// bias, svg) next to each other in `dir`.
void write_report_files(const std::filesystem::path& dir,
                        std::span<const ExperimentRecord> records, Loss measure);

}  // namespace quantbench
