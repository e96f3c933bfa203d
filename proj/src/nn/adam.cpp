#include "aeunmix/nn/adam.hpp"

#include <cmath>

#include "aeunmix/errors.hpp"

namespace aeunmix::nn {

StepStatus adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state) {
  const auto& o = state.options;
  if (!(o.beta1 > 0.0 && o.beta1 < 1.0 && o.beta2 > 0.0 && o.beta2 < 1.0))
    throw PreconditionError("adam: beta1 and beta2 must lie in (0, 1)");
  if (params.size() != grads.size()) throw DimensionError("adam: parameter/gradient count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k)
    if (!params[k]->same_shape(grads[k])) throw DimensionError("adam: gradient shape mismatch");

  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  } else {
    if (state.m.size() != params.size()) throw DimensionError("adam: state does not match parameters");
    for (std::size_t k = 0; k < params.size(); ++k)
      if (!state.m[k].same_shape(*params[k])) throw DimensionError("adam: state shape mismatch");
  }

  for (const Matrix& g : grads)
    if (!all_finite(g)) return StepStatus::Diverged;

  ++state.step;
  const double t = double(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k]->values();
    const auto& g = grads[k].values();
    auto& m = state.m[k].values();
    auto& v = state.v[k].values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= o.learning_rate * mhat / (std::sqrt(vhat) + o.epsilon);
    }
  }
  return StepStatus::Ok;
}

}  // namespace aeunmix::nn
