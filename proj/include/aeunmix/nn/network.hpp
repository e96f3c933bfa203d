#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "aeunmix/nn/init.hpp"
#include "aeunmix/nn/layers.hpp"

namespace aeunmix::nn {

enum class Architecture { Original, Basic };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view text);

struct NetworkOptions {
  double gd_rate = 0.0;        // Gaussian dropout rate, original architecture only
  bool latent_sigmoid = true;  // sigmoid after the E-wide linear layer (original)
};

// Everything backward needs from one forward call.
struct ForwardCache {
  std::uint64_t network_id = 0;
  std::uint64_t version = 0;
  Mode mode = Mode::Eval;
  std::vector<LayerCache> encoder;
  LayerCache decoder;
};

struct ForwardResult {
  Matrix reconstruction;  // B x batch
  Matrix abundances;      // E x batch, sum-to-one output before dropout
  ForwardCache cache;
};

// A named view of one trainable tensor.
struct ParameterRef {
  std::string name;
  Matrix* value;
};

// Gradients in the order of Network::parameters().
struct Gradients {
  std::vector<std::string> names;
  std::vector<Matrix> values;
};

// Dense autoencoder: encoder layer stack followed by a bias-free linear
// decoder whose weight columns are the endmember estimates.
class Network {
 public:
  // Validates that widths chain from `bands` to the decoder input and that a
  // SumToOne layer, if any, is the last encoder layer (optionally followed by
  // Gaussian dropout).
  Network(std::size_t bands, std::vector<std::unique_ptr<Layer>> encoder, Linear decoder);

  // original: 4 x (Linear + Sigmoid) with widths 9E, 6E, 3E, E, then
  //           BatchNorm, SoftThreshold, SumToOne, GaussianDropout.
  // basic:    Linear(B, n1 E) + ReLU, Linear(n1 E, E) + ReLU, SumToOne.
  // Decoder Linear(E, B) without bias in both cases.
  static Network build(Architecture arch, std::size_t bands, std::size_t endmembers,
                       std::size_t n1, const NetworkOptions& options = {});

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  // Every Linear layer l (encoder order, decoder last) draws from
  // mix_seed(seed, l).
  void initialize(InitScheme scheme, std::uint64_t seed);

  ForwardResult forward(const Matrix& batch, Mode mode, std::uint64_t noise_seed);
  Gradients backward(const ForwardCache& cache, const Matrix& loss_grad) const;

  // Eval-mode pass without side effects.
  Matrix encode(const Matrix& x) const;
  Matrix reconstruct(const Matrix& x) const;

  // Handing out mutable references marks outstanding caches as stale.
  std::vector<ParameterRef> parameters();
  std::vector<const Matrix*> parameters() const;
  std::vector<std::string> parameter_names() const;
  std::vector<ParameterRef> buffers();
  std::vector<const Matrix*> buffers() const;

  const std::vector<std::unique_ptr<Layer>>& encoder() const { return encoder_; }
  const Linear& decoder() const { return decoder_; }
  Matrix& decoder_weights();

  std::size_t bands() const { return bands_; }
  std::size_t latent_dim() const { return decoder_.in(); }
  std::uint64_t version() const { return version_; }
  std::uint64_t id() const { return id_; }

  // FNV-1a over all parameter bytes, in parameters() order.
  std::uint64_t parameter_checksum() const;

  // Encoder indices of Linear layers, for gradient tracing.
  std::vector<std::size_t> encoder_linear_indices() const;

 private:
  void validate() const;

  std::size_t bands_;
  std::vector<std::unique_ptr<Layer>> encoder_;
  Linear decoder_;
  std::uint64_t id_;
  std::uint64_t version_ = 0;
};

}  // namespace aeunmix::nn
