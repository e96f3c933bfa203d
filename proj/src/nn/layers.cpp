#include "aeunmix/nn/layers.hpp"

#include <cmath>
#include <random>

#include "aeunmix/errors.hpp"
#include "aeunmix/kernels.hpp"
#include "aeunmix/seeding.hpp"

namespace aeunmix::nn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Linear: return "linear";
    case LayerKind::Sigmoid: return "sigmoid";
    case LayerKind::ReLU: return "relu";
    case LayerKind::BatchNorm: return "batch_norm";
    case LayerKind::SoftThreshold: return "soft_threshold";
    case LayerKind::SumToOne: return "sum_to_one";
    case LayerKind::GaussianDropout: return "gaussian_dropout";
  }
  return "unknown";
}

namespace {

void check_rows(const Matrix& x, std::size_t rows, const char* who) {
  if (x.rows() != rows)
    throw DimensionError(std::string(who) + ": expected " + std::to_string(rows) +
                         " input rows, got " + std::to_string(x.rows()));
}

void check_grad(const LayerCache& cache, const Matrix& grad_out, const char* who) {
  if (!grad_out.same_shape(cache.output))
    throw DimensionError(std::string(who) + ": upstream gradient shape does not match cached output");
}

}  // namespace

// ---- Linear ---------------------------------------------------------------

Linear::Linear(std::size_t in, std::size_t out, bool has_bias)
    : in_(in), out_(out), has_bias_(has_bias), weights_(out, in), bias_(has_bias ? out : 0, has_bias ? 1 : 0) {
  if (in < 1 || out < 1) throw PreconditionError("Linear: in and out must be >= 1");
}

Matrix Linear::infer(const Matrix& x) const {
  check_rows(x, in_, "Linear");
  Matrix y = kernels::matmul(weights_, x);
  if (has_bias_)
    for (std::size_t c = 0; c < y.cols(); ++c)
      for (std::size_t r = 0; r < out_; ++r) y(r, c) += bias_(r, 0);
  return y;
}

Matrix Linear::forward(const Matrix& x, Mode, std::uint64_t, LayerCache& cache) {
  cache.input = x;
  cache.output = infer(x);
  return cache.output;
}

Matrix Linear::backward(const LayerCache& cache, const Matrix& grad_out,
                        std::vector<Matrix>& param_grads) const {
  check_grad(cache, grad_out, "Linear");
  param_grads.clear();
  param_grads.push_back(kernels::matmul_nt(grad_out, cache.input));
  if (has_bias_) {
    Matrix db(out_, 1);
    for (std::size_t c = 0; c < grad_out.cols(); ++c)
      for (std::size_t r = 0; r < out_; ++r) db(r, 0) += grad_out(r, c);
    param_grads.push_back(std::move(db));
  }
  return kernels::matmul_tn(weights_, grad_out);
}

std::vector<Matrix*> Linear::parameters() {
  if (has_bias_) return {&weights_, &bias_};
  return {&weights_};
}
std::vector<const Matrix*> Linear::parameters() const {
  if (has_bias_) return {&weights_, &bias_};
  return {&weights_};
}
std::vector<std::string> Linear::parameter_names() const {
  if (has_bias_) return {"weight", "bias"};
  return {"weight"};
}

// ---- Sigmoid / ReLU -------------------------------------------------------

Matrix Sigmoid::infer(const Matrix& x) const {
  Matrix y = x;
  for (double& v : y.values()) v = 1.0 / (1.0 + std::exp(-v));
  return y;
}

Matrix Sigmoid::forward(const Matrix& x, Mode, std::uint64_t, LayerCache& cache) {
  cache.output = infer(x);
  return cache.output;
}

Matrix Sigmoid::backward(const LayerCache& cache, const Matrix& grad_out,
                         std::vector<Matrix>& param_grads) const {
  check_grad(cache, grad_out, "Sigmoid");
  param_grads.clear();
  Matrix dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double y = cache.output.values()[i];
    dx.values()[i] *= y * (1.0 - y);
  }
  return dx;
}

Matrix ReLU::infer(const Matrix& x) const {
  Matrix y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Matrix ReLU::forward(const Matrix& x, Mode, std::uint64_t, LayerCache& cache) {
  cache.input = x;
  cache.output = infer(x);
  return cache.output;
}

Matrix ReLU::backward(const LayerCache& cache, const Matrix& grad_out,
                      std::vector<Matrix>& param_grads) const {
  check_grad(cache, grad_out, "ReLU");
  param_grads.clear();
  Matrix dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (!(cache.input.values()[i] > 0.0)) dx.values()[i] = 0.0;
  return dx;
}

// ---- BatchNorm ------------------------------------------------------------

BatchNorm::BatchNorm(std::size_t features)
    : features_(features),
      gamma_(features, 1, 1.0),
      beta_(features, 1, 0.0),
      running_mean_(features, 1, 0.0),
      running_var_(features, 1, 1.0) {
  if (features < 1) throw PreconditionError("BatchNorm: features must be >= 1");
}

Matrix BatchNorm::infer(const Matrix& x) const {
  check_rows(x, features_, "BatchNorm");
  Matrix y(x.rows(), x.cols());
  for (std::size_t f = 0; f < features_; ++f) {
    const double inv = 1.0 / std::sqrt(running_var_(f, 0) + kEpsilon);
    for (std::size_t c = 0; c < x.cols(); ++c)
      y(f, c) = gamma_(f, 0) * (x(f, c) - running_mean_(f, 0)) * inv + beta_(f, 0);
  }
  return y;
}

Matrix BatchNorm::forward(const Matrix& x, Mode mode, std::uint64_t, LayerCache& cache) {
  if (mode == Mode::Eval) {
    cache.output = infer(x);
    return cache.output;
  }
  check_rows(x, features_, "BatchNorm");
  const std::size_t n = x.cols();
  if (n < 2) throw PreconditionError("BatchNorm: train mode needs a batch of at least 2");

  Matrix xhat(features_, n);
  Matrix y(features_, n);
  cache.stats.assign(features_, 0.0);
  for (std::size_t f = 0; f < features_; ++f) {
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean += x(f, c);
    mean /= double(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (x(f, c) - mean) * (x(f, c) - mean);
    var /= double(n);
    const double inv = 1.0 / std::sqrt(var + kEpsilon);
    cache.stats[f] = inv;
    for (std::size_t c = 0; c < n; ++c) {
      xhat(f, c) = (x(f, c) - mean) * inv;
      y(f, c) = gamma_(f, 0) * xhat(f, c) + beta_(f, 0);
    }
    running_mean_(f, 0) = (1.0 - kMomentum) * running_mean_(f, 0) + kMomentum * mean;
    running_var_(f, 0) = (1.0 - kMomentum) * running_var_(f, 0) +
                         kMomentum * var * double(n) / double(n - 1);
  }
  cache.aux = std::move(xhat);
  cache.output = y;
  return y;
}

Matrix BatchNorm::backward(const LayerCache& cache, const Matrix& grad_out,
                           std::vector<Matrix>& param_grads) const {
  check_grad(cache, grad_out, "BatchNorm");
  if (cache.aux.empty()) throw PreconditionError("BatchNorm: backward needs a train-mode cache");
  const std::size_t n = grad_out.cols();
  Matrix dgamma(features_, 1), dbeta(features_, 1), dx(features_, n);
  for (std::size_t f = 0; f < features_; ++f) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      sum_g += grad_out(f, c);
      sum_gx += grad_out(f, c) * cache.aux(f, c);
    }
    dgamma(f, 0) = sum_gx;
    dbeta(f, 0) = sum_g;
    const double k = gamma_(f, 0) * cache.stats[f] / double(n);
    for (std::size_t c = 0; c < n; ++c)
      dx(f, c) = k * (double(n) * grad_out(f, c) - sum_g - cache.aux(f, c) * sum_gx);
  }
  param_grads = {std::move(dgamma), std::move(dbeta)};
  return dx;
}

// ---- SoftThreshold --------------------------------------------------------

SoftThreshold::SoftThreshold(std::size_t features) : features_(features), alpha_(features, 1, 0.0) {
  if (features < 1) throw PreconditionError("SoftThreshold: features must be >= 1");
}

Matrix SoftThreshold::infer(const Matrix& x) const {
  check_rows(x, features_, "SoftThreshold");
  Matrix y(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c)
    for (std::size_t f = 0; f < features_; ++f) {
      const double v = x(f, c) - alpha_(f, 0);
      y(f, c) = v > 0.0 ? v : 0.0;
    }
  return y;
}

Matrix SoftThreshold::forward(const Matrix& x, Mode, std::uint64_t, LayerCache& cache) {
  cache.input = x;
  cache.output = infer(x);
  return cache.output;
}

Matrix SoftThreshold::backward(const LayerCache& cache, const Matrix& grad_out,
                               std::vector<Matrix>& param_grads) const {
  check_grad(cache, grad_out, "SoftThreshold");
  Matrix dx(grad_out.rows(), grad_out.cols());
  Matrix dalpha(features_, 1);
  for (std::size_t c = 0; c < grad_out.cols(); ++c)
    for (std::size_t f = 0; f < features_; ++f) {
      // Subgradient 0 at the kink.
      if (cache.input(f, c) - alpha_(f, 0) > 0.0) {
        dx(f, c) = grad_out(f, c);
        dalpha(f, 0) -= grad_out(f, c);
      }
    }
  param_grads = {std::move(dalpha)};
  return dx;
}

// ---- SumToOne -------------------------------------------------------------

Matrix SumToOne::infer(const Matrix& x) const {
  Matrix y(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double s = 0.0;
    for (double v : x.col(c)) s += v;
    auto out = y.col(c);
    auto in = x.col(c);
    if (s == 0.0) {
      std::fill(out.begin(), out.end(), 1.0 / double(x.rows()));
    } else {
      const double d = s + kGuard;
      for (std::size_t r = 0; r < x.rows(); ++r) out[r] = in[r] / d;
    }
  }
  return y;
}

Matrix SumToOne::forward(const Matrix& x, Mode, std::uint64_t, LayerCache& cache) {
  cache.input = x;
  cache.stats.assign(x.cols(), 0.0);
  for (std::size_t c = 0; c < x.cols(); ++c)
    for (double v : x.col(c)) cache.stats[c] += v;
  cache.output = infer(x);
  return cache.output;
}

Matrix SumToOne::backward(const LayerCache& cache, const Matrix& grad_out,
                          std::vector<Matrix>& param_grads) const {
  check_grad(cache, grad_out, "SumToOne");
  param_grads.clear();
  Matrix dx(grad_out.rows(), grad_out.cols());
  for (std::size_t c = 0; c < grad_out.cols(); ++c) {
    const double s = cache.stats[c];
    if (s == 0.0) continue;
    const double d = s + kGuard;
    double gx = 0.0;
    for (std::size_t r = 0; r < grad_out.rows(); ++r) gx += grad_out(r, c) * cache.input(r, c);
    for (std::size_t r = 0; r < grad_out.rows(); ++r) dx(r, c) = grad_out(r, c) / d - gx / (d * d);
  }
  return dx;
}

// ---- GaussianDropout ------------------------------------------------------

GaussianDropout::GaussianDropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw PreconditionError("GaussianDropout: rate must lie in [0, 1)");
}

Matrix GaussianDropout::forward(const Matrix& x, Mode mode, std::uint64_t noise_seed, LayerCache& cache) {
  cache.aux = Matrix(x.rows(), x.cols(), 1.0);
  if (mode == Mode::Train && rate_ > 0.0) {
    Rng rng(noise_seed);
    std::normal_distribution<double> d(1.0, std::sqrt(rate_ / (1.0 - rate_)));
    for (double& v : cache.aux.values()) v = d(rng);
  }
  Matrix y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y.values()[i] *= cache.aux.values()[i];
  cache.output = y;
  return y;
}

Matrix GaussianDropout::backward(const LayerCache& cache, const Matrix& grad_out,
                                 std::vector<Matrix>& param_grads) const {
  check_grad(cache, grad_out, "GaussianDropout");
  param_grads.clear();
  Matrix dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) dx.values()[i] *= cache.aux.values()[i];
  return dx;
}

}  // namespace aeunmix::nn
