#pragma once

#include <cstddef>
#include <span>

#include "aeunmix/harness.hpp"

namespace aeunmix::stats {

// Share of records whose metric is strictly below `threshold`. Diverged runs
// and records missing the metric count as failures.
double estimate_success_prob(std::span<const RunRecord> records, Metric metric, double threshold);
double estimate_success_prob(std::span<const double> errors, double threshold);

// Smallest n with 1 - (1 - p_hat)^n >= confidence. Throws
// UnreachableThresholdError for p_hat == 0 and PreconditionError for
// arguments out of range.
std::size_t required_trials(double p_hat, double confidence);

struct RetryPlan {
  double threshold = 0.0;
  double p_hat = 0.0;
  double confidence = 0.95;
  std::size_t n_req = 0;  // 0 when unreachable
  bool reachable() const { return n_req > 0; }
};

RetryPlan plan_retries(std::span<const RunRecord> records, Metric metric, double threshold, double confidence = 0.95);

}  // namespace aeunmix::stats
