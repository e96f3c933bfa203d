#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "aeunmix/matrix.hpp"

namespace aeunmix::nn {

enum class Mode { Train, Eval };

enum class LayerKind { Linear, Sigmoid, ReLU, BatchNorm, SoftThreshold, SumToOne, GaussianDropout };

std::string to_string(LayerKind kind);

// What a layer keeps from forward for its backward pass.
struct LayerCache {
  Matrix input;
  Matrix output;
  Matrix aux;                // batch-norm x_hat or dropout noise
  std::vector<double> stats; // batch-norm inverse std or per-column sums
};

// One stage of the pipeline, operating on B x batch column blocks.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;
  // Output width for a given input width.
  virtual std::size_t output_width(std::size_t input_width) const { return input_width; }

  // Train mode may update internal running statistics. `noise_seed` feeds
  // stochastic layers only.
  virtual Matrix forward(const Matrix& x, Mode mode, std::uint64_t noise_seed, LayerCache& cache) = 0;
  // Eval-mode forward without side effects.
  virtual Matrix infer(const Matrix& x) const = 0;
  // Returns dL/dx and writes parameter gradients, one per parameters() entry.
  virtual Matrix backward(const LayerCache& cache, const Matrix& grad_out,
                          std::vector<Matrix>& param_grads) const = 0;

  virtual std::vector<Matrix*> parameters() { return {}; }
  virtual std::vector<const Matrix*> parameters() const { return {}; }
  virtual std::vector<std::string> parameter_names() const { return {}; }
  // Non-trainable state that still belongs in a checkpoint.
  virtual std::vector<Matrix*> buffers() { return {}; }
  virtual std::vector<const Matrix*> buffers() const { return {}; }
  virtual std::vector<std::string> buffer_names() const { return {}; }
};

class Linear final : public Layer {
 public:
  Linear(std::size_t in, std::size_t out, bool has_bias);

  LayerKind kind() const override { return LayerKind::Linear; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Linear>(*this); }
  std::size_t output_width(std::size_t) const override { return out_; }
  Matrix forward(const Matrix& x, Mode mode, std::uint64_t, LayerCache& cache) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const LayerCache& cache, const Matrix& grad_out,
                  std::vector<Matrix>& param_grads) const override;
  std::vector<Matrix*> parameters() override;
  std::vector<const Matrix*> parameters() const override;
  std::vector<std::string> parameter_names() const override;

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  bool has_bias() const { return has_bias_; }
  Matrix& weights() { return weights_; }
  const Matrix& weights() const { return weights_; }
  Matrix& bias() { return bias_; }
  const Matrix& bias() const { return bias_; }

 private:
  std::size_t in_, out_;
  bool has_bias_;
  Matrix weights_;  // out x in
  Matrix bias_;     // out x 1, empty without bias
};

class Sigmoid final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Sigmoid; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Sigmoid>(*this); }
  Matrix forward(const Matrix& x, Mode mode, std::uint64_t, LayerCache& cache) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const LayerCache& cache, const Matrix& grad_out,
                  std::vector<Matrix>& param_grads) const override;
};

class ReLU final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::ReLU; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }
  Matrix forward(const Matrix& x, Mode mode, std::uint64_t, LayerCache& cache) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const LayerCache& cache, const Matrix& grad_out,
                  std::vector<Matrix>& param_grads) const override;
};

// Per-feature batch normalisation over the batch (column) axis.
class BatchNorm final : public Layer {
 public:
  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.1;

  explicit BatchNorm(std::size_t features);

  LayerKind kind() const override { return LayerKind::BatchNorm; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }
  Matrix forward(const Matrix& x, Mode mode, std::uint64_t, LayerCache& cache) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const LayerCache& cache, const Matrix& grad_out,
                  std::vector<Matrix>& param_grads) const override;
  std::vector<Matrix*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<const Matrix*> parameters() const override { return {&gamma_, &beta_}; }
  std::vector<std::string> parameter_names() const override { return {"gamma", "beta"}; }
  std::vector<Matrix*> buffers() override { return {&running_mean_, &running_var_}; }
  std::vector<const Matrix*> buffers() const override { return {&running_mean_, &running_var_}; }
  std::vector<std::string> buffer_names() const override { return {"running_mean", "running_var"}; }

  std::size_t features() const { return features_; }
  const Matrix& running_mean() const { return running_mean_; }
  const Matrix& running_var() const { return running_var_; }

 private:
  std::size_t features_;
  Matrix gamma_, beta_;
  Matrix running_mean_, running_var_;
};

// max(0, x - alpha) with a trainable per-feature threshold alpha.
class SoftThreshold final : public Layer {
 public:
  explicit SoftThreshold(std::size_t features);

  LayerKind kind() const override { return LayerKind::SoftThreshold; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<SoftThreshold>(*this); }
  Matrix forward(const Matrix& x, Mode mode, std::uint64_t, LayerCache& cache) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const LayerCache& cache, const Matrix& grad_out,
                  std::vector<Matrix>& param_grads) const override;
  std::vector<Matrix*> parameters() override { return {&alpha_}; }
  std::vector<const Matrix*> parameters() const override { return {&alpha_}; }
  std::vector<std::string> parameter_names() const override { return {"alpha"}; }

  std::size_t features() const { return features_; }
  Matrix& alpha() { return alpha_; }

 private:
  std::size_t features_;
  Matrix alpha_;
};

// Divides each column by (its sum + 1e-12). A column that is exactly zero
// (every unit rectified away) maps to the simplex centre 1/E with zero
// gradient, so outputs always satisfy the abundance constraints.
class SumToOne final : public Layer {
 public:
  static constexpr double kGuard = 1e-12;

  LayerKind kind() const override { return LayerKind::SumToOne; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<SumToOne>(*this); }
  Matrix forward(const Matrix& x, Mode mode, std::uint64_t, LayerCache& cache) override;
  Matrix infer(const Matrix& x) const override;
  Matrix backward(const LayerCache& cache, const Matrix& grad_out,
                  std::vector<Matrix>& param_grads) const override;
};

// Multiplicative N(1, rate / (1 - rate)) noise in train mode, identity in eval.
class GaussianDropout final : public Layer {
 public:
  explicit GaussianDropout(double rate);

  LayerKind kind() const override { return LayerKind::GaussianDropout; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<GaussianDropout>(*this); }
  Matrix forward(const Matrix& x, Mode mode, std::uint64_t noise_seed, LayerCache& cache) override;
  Matrix infer(const Matrix& x) const override { return x; }
  Matrix backward(const LayerCache& cache, const Matrix& grad_out,
                  std::vector<Matrix>& param_grads) const override;

  double rate() const { return rate_; }

 private:
  double rate_;
};

}  // namespace aeunmix::nn
