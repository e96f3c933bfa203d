#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aeunmix/matrix.hpp"

namespace aeunmix::nn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates, shaped like the parameters on first use.
struct AdamState {
  AdamOptions options;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t step = 0;
};

enum class StepStatus { Ok, Diverged };

// One bias-corrected Adam update. A non-finite gradient entry leaves
// parameters and state untouched and reports Diverged.
StepStatus adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state);

}  // namespace aeunmix::nn
