#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aeunmix/harness.hpp"
#include "aeunmix/stats/rank_tests.hpp"
#include "aeunmix/stats/retry.hpp"
#include "json.hpp"

namespace aeunmix {

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
};

// Freedman-Diaconis width 2*IQR/n^(1/3) unless `bins` is given. Identical
// values (or zero IQR with no spread) collapse to a single bin. Non-finite
// values are ignored.
std::vector<HistogramBin> histogram(std::span<const double> values, std::optional<std::size_t> bins = std::nullopt);

// Default thresholds by training loss: MSE {0.01, 0.015, 0.05}, SAD {0.05, 0.075, 0.1}.
std::vector<double> default_thresholds(LossKind loss);
Metric default_report_metric(LossKind loss);

struct ReportOptions {
  Metric metric = Metric::ReconRmse;
  std::vector<double> thresholds;
  double confidence = 0.95;
  std::optional<std::size_t> bins;
};

nlohmann::json stat_report_to_json(const stats::StatReport& report);
// stat_report.json, plus posthoc.csv and posthoc_long.csv (i,j,p,significant)
// when a post-hoc matrix exists.
void write_stat_report(const stats::StatReport& report, const std::filesystem::path& out_dir);

// histogram.csv, trials.csv, summary.txt and, when given, the StatReport files.
// Throws FormatError when out_dir cannot be written.
void emit_report(std::span<const RunRecord> records, const std::optional<stats::StatReport>& stat_report,
                 const std::filesystem::path& out_dir, const ReportOptions& options);

}  // namespace aeunmix
