#include "aeunmix/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "aeunmix/errors.hpp"
#include "aeunmix/metrics.hpp"

namespace aeunmix {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxBins = 10000;

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  // Shortest text that parses back to the same double.
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

json finite_or_string(double v) { return std::isfinite(v) ? json(v) : json(num(v)); }

}  // namespace

std::vector<HistogramBin> histogram(std::span<const double> values, std::optional<std::size_t> bins) {
  std::vector<double> v;
  for (double x : values)
    if (std::isfinite(x)) v.push_back(x);
  if (v.empty()) return {};
  std::sort(v.begin(), v.end());
  const double lo = v.front();
  const double hi = v.back();
  if (lo == hi) return {{lo, hi, v.size()}};

  std::size_t count;
  if (bins && *bins > 0) {
    count = *bins;
  } else {
    const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
    const double width = 2.0 * iqr / std::cbrt(static_cast<double>(v.size()));
    count = width > 0.0 ? static_cast<std::size_t>(std::ceil((hi - lo) / width)) : 1;
    count = std::clamp<std::size_t>(count, 1, kMaxBins);
  }
  const double width = (hi - lo) / static_cast<double>(count);
  std::vector<HistogramBin> out(count);
  for (std::size_t b = 0; b < count; ++b) {
    out[b].left = lo + width * static_cast<double>(b);
    out[b].right = b + 1 == count ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (double x : v) {
    auto b = static_cast<std::size_t>((x - lo) / width);
    out[std::min(b, count - 1)].count++;
  }
  return out;
}

std::vector<double> default_thresholds(LossKind loss) {
  return loss == LossKind::MSE ? std::vector<double>{0.01, 0.015, 0.05} : std::vector<double>{0.05, 0.075, 0.1};
}

Metric default_report_metric(LossKind loss) { return loss == LossKind::MSE ? Metric::ReconRmse : Metric::ReconSad; }

json stat_report_to_json(const stats::StatReport& r) {
  json j;
  j["metric"] = r.metric;
  j["alpha"] = r.alpha;
  j["groups"] = r.group_count;
  j["samples"] = r.sample_count;
  j["excluded_records"] = r.excluded_records;
  if (r.levene)
    j["levene"] = {{"statistic", finite_or_string(r.levene->statistic)}, {"p", r.levene->p}};
  else
    j["levene"] = nullptr;
  j["kruskal"] = {{"H", r.kruskal.H}, {"p", r.kruskal.p}, {"log_p", finite_or_string(r.kruskal.log_p)}};
  j["rejected"] = r.rejected;
  if (r.posthoc) {
    json rows = json::array();
    for (std::size_t i = 0; i < r.posthoc->rows(); ++i) {
      json row = json::array();
      for (std::size_t c = 0; c < r.posthoc->cols(); ++c) row.push_back((*r.posthoc)(i, c));
      rows.push_back(row);
    }
    j["posthoc"] = rows;
    j["ph_ratio"] = r.ph_ratio;
  } else {
    j["posthoc"] = nullptr;
    j["notice"] = "Kruskal-Wallis did not reject at alpha; no post-hoc analysis";
  }
  return j;
}

void write_stat_report(const stats::StatReport& r, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  open_out(out_dir / "stat_report.json") << stat_report_to_json(r).dump(2) << '\n';
  if (!r.posthoc) return;
  const Matrix& p = *r.posthoc;
  {
    auto out = open_out(out_dir / "posthoc.csv");
    out << "init";
    for (std::size_t c = 0; c < p.cols(); ++c) out << ',' << c + 1;
    out << '\n';
    for (std::size_t i = 0; i < p.rows(); ++i) {
      out << i + 1;
      for (std::size_t c = 0; c < p.cols(); ++c) out << ',' << num(p(i, c));
      out << '\n';
    }
  }
  auto out = open_out(out_dir / "posthoc_long.csv");
  out << "i,j,p,significant\n";
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t c = 0; c < p.cols(); ++c)
      out << i + 1 << ',' << c + 1 << ',' << num(p(i, c)) << ',' << (i != c && p(i, c) < r.alpha ? 1 : 0) << '\n';
}

void emit_report(std::span<const RunRecord> records, const std::optional<stats::StatReport>& stat_report,
                 const fs::path& out_dir, const ReportOptions& options) {
  if (records.empty()) throw PreconditionError("emit_report: no records");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw FormatError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<double> values;
  for (const auto& r : records) values.push_back(metric_value(r, options.metric));

  {
    auto out = open_out(out_dir / "histogram.csv");
    out << "bin_left,bin_right,count\n";
    for (const auto& b : histogram(values, options.bins)) out << num(b.left) << ',' << num(b.right) << ',' << b.count << '\n';
  }
  {
    auto out = open_out(out_dir / "trials.csv");
    out << "threshold,p_hat,n_req,reachable\n";
    for (double t : options.thresholds) {
      const auto plan = stats::plan_retries(records, options.metric, t, options.confidence);
      out << num(t) << ',' << num(plan.p_hat) << ',';
      if (plan.reachable())
        out << plan.n_req << ",1\n";
      else
        out << ",0\n";
    }
  }
  {
    auto out = open_out(out_dir / "summary.txt");
    out << "runs: " << records.size() << '\n';
    out << "diverged: " << std::count_if(records.begin(), records.end(), [](const RunRecord& r) { return r.diverged; })
        << '\n';
    out << "metric: " << to_string(options.metric) << '\n';
    ErrorSummary summary;
    try {
      summary = aggregate_errors(records);
    } catch (const PreconditionError&) {
      summary.count = 0;
    }
    if (summary.count == 0) {
      out << "abundance_rmse: n/a (no ground truth)\n";
      out << "endmember_sad: n/a (no ground truth)\n";
    } else {
      out << "abundance_rmse: " << format_mean_std(summary.abundance_mean, summary.abundance_std) << '\n';
      out << "endmember_sad: " << format_mean_std(summary.endmember_mean, summary.endmember_std) << '\n';
      out << "runs_with_ground_truth: " << summary.count << '\n';
    }
  }
  if (stat_report) write_stat_report(*stat_report, out_dir);
}

}  // namespace aeunmix
