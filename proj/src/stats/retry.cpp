#include "aeunmix/stats/retry.hpp"

#include <cmath>
#include <string>

#include "aeunmix/errors.hpp"

namespace aeunmix::stats {

double estimate_success_prob(std::span<const double> errors, double threshold) {
  if (errors.empty()) throw PreconditionError("estimate_success_prob: no values");
  std::size_t hits = 0;
  for (double e : errors)
    if (e < threshold) ++hits;  // NaN compares false
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

double estimate_success_prob(std::span<const RunRecord> records, Metric metric, double threshold) {
  if (records.empty()) throw PreconditionError("estimate_success_prob: no records");
  std::vector<double> values;
  values.reserve(records.size());
  for (const auto& r : records) values.push_back(metric_value(r, metric));
  return estimate_success_prob(std::span<const double>(values), threshold);
}

std::size_t required_trials(double p_hat, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw PreconditionError("required_trials: confidence must lie in (0, 1)");
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw PreconditionError("required_trials: p_hat must lie in [0, 1]");
  if (p_hat == 0.0) throw UnreachableThresholdError("no run reached the threshold; retries cannot be planned");
  if (p_hat == 1.0) return 1;
  const double ratio = std::log1p(-confidence) / std::log1p(-p_hat);
  // Shave rounding noise so exact ratios such as 1.0 do not round up.
  const double n = std::ceil(ratio * (1.0 - 1e-12));
  return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

RetryPlan plan_retries(std::span<const RunRecord> records, Metric metric, double threshold, double confidence) {
  RetryPlan plan;
  plan.threshold = threshold;
  plan.confidence = confidence;
  plan.p_hat = estimate_success_prob(records, metric, threshold);
  if (plan.p_hat > 0.0) plan.n_req = required_trials(plan.p_hat, confidence);
  return plan;
}

}  // namespace aeunmix::stats
