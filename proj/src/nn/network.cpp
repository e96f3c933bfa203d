#include "aeunmix/nn/network.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>

#include "aeunmix/errors.hpp"
#include "aeunmix/seeding.hpp"

namespace aeunmix::nn {
namespace {

std::uint64_t next_network_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

std::string_view to_string(Architecture arch) {
  return arch == Architecture::Original ? "original" : "basic";
}

Architecture parse_architecture(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "original") return Architecture::Original;
  if (t == "basic") return Architecture::Basic;
  throw ConfigError("unknown architecture '" + std::string(text) + "' (expected original or basic)");
}

Network::Network(std::size_t bands, std::vector<std::unique_ptr<Layer>> encoder, Linear decoder)
    : bands_(bands), encoder_(std::move(encoder)), decoder_(std::move(decoder)), id_(next_network_id()) {
  validate();
}

void Network::validate() const {
  std::size_t width = bands_;
  bool seen_sum_to_one = false;
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    const Layer& layer = *encoder_[i];
    if (seen_sum_to_one && layer.kind() != LayerKind::GaussianDropout)
      throw PreconditionError("SumToOne must be the encoder output (only dropout may follow)");
    switch (layer.kind()) {
      case LayerKind::Linear:
        if (static_cast<const Linear&>(layer).in() != width)
          throw DimensionError("encoder layer " + std::to_string(i) + ": width mismatch");
        break;
      case LayerKind::BatchNorm:
        if (static_cast<const BatchNorm&>(layer).features() != width)
          throw DimensionError("BatchNorm features != preceding width");
        break;
      case LayerKind::SoftThreshold:
        if (static_cast<const SoftThreshold&>(layer).features() != width)
          throw DimensionError("SoftThreshold features != preceding width");
        break;
      case LayerKind::SumToOne:
        if (seen_sum_to_one) throw PreconditionError("SumToOne may appear only once");
        seen_sum_to_one = true;
        break;
      default:
        break;
    }
    width = layer.output_width(width);
  }
  if (decoder_.in() != width) throw DimensionError("decoder input width != encoder output width");
  if (decoder_.out() != bands_) throw DimensionError("decoder output width != band count");
  if (decoder_.has_bias()) throw PreconditionError("decoder must not have a bias");
}

Network Network::build(Architecture arch, std::size_t bands, std::size_t endmembers, std::size_t n1,
                       const NetworkOptions& options) {
  if (endmembers < 2 || bands <= endmembers) throw PreconditionError("build_network: need B > E >= 2");
  const std::size_t e = endmembers;
  std::vector<std::unique_ptr<Layer>> enc;
  if (arch == Architecture::Original) {
    const std::size_t widths[] = {9 * e, 6 * e, 3 * e, e};
    std::size_t in = bands;
    for (std::size_t k = 0; k < 4; ++k) {
      enc.push_back(std::make_unique<Linear>(in, widths[k], true));
      if (k < 3 || options.latent_sigmoid) enc.push_back(std::make_unique<Sigmoid>());
      in = widths[k];
    }
    enc.push_back(std::make_unique<BatchNorm>(e));
    enc.push_back(std::make_unique<SoftThreshold>(e));
    enc.push_back(std::make_unique<SumToOne>());
    enc.push_back(std::make_unique<GaussianDropout>(options.gd_rate));
  } else {
    if (n1 < 1) throw PreconditionError("build_network: n1 must be >= 1");
    enc.push_back(std::make_unique<Linear>(bands, n1 * e, true));
    enc.push_back(std::make_unique<ReLU>());
    enc.push_back(std::make_unique<Linear>(n1 * e, e, true));
    enc.push_back(std::make_unique<ReLU>());
    enc.push_back(std::make_unique<SumToOne>());
  }
  return Network(bands, std::move(enc), Linear(e, bands, false));
}

Network::Network(const Network& other)
    : bands_(other.bands_), decoder_(other.decoder_), id_(next_network_id()), version_(0) {
  for (const auto& l : other.encoder_) encoder_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Network::initialize(InitScheme scheme, std::uint64_t seed) {
  std::uint64_t l = 0;
  auto apply = [&](Linear& lin) {
    auto init = init_weights(scheme, lin.in(), lin.out(), mix_seed(seed, l++));
    lin.weights() = std::move(init.weights);
    if (lin.has_bias()) lin.bias() = std::move(init.bias);
  };
  for (auto& layer : encoder_)
    if (layer->kind() == LayerKind::Linear) apply(static_cast<Linear&>(*layer));
  apply(decoder_);
  ++version_;
}

ForwardResult Network::forward(const Matrix& batch, Mode mode, std::uint64_t noise_seed) {
  if (batch.rows() != bands_) throw DimensionError("forward: batch rows != band count");
  if (batch.cols() < 1) throw PreconditionError("forward: empty batch");
  if (!all_finite(batch)) throw PreconditionError("forward: non-finite input");

  ForwardResult result;
  result.cache.network_id = id_;
  result.cache.mode = mode;
  result.cache.encoder.resize(encoder_.size());
  Matrix h = batch;
  bool have_abundances = false;
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    h = encoder_[i]->forward(h, mode, mix_seed(noise_seed, i), result.cache.encoder[i]);
    if (encoder_[i]->kind() == LayerKind::SumToOne) {
      result.abundances = h;
      have_abundances = true;
    }
  }
  if (!have_abundances) result.abundances = h;
  result.reconstruction = decoder_.forward(h, mode, 0, result.cache.decoder);
  // BatchNorm running statistics are buffers, not parameters; the cache is
  // tied to the current parameter version.
  result.cache.version = version_;
  return result;
}

Gradients Network::backward(const ForwardCache& cache, const Matrix& loss_grad) const {
  if (cache.network_id != id_ || cache.version != version_)
    throw PreconditionError("backward: stale or foreign forward cache");
  if (cache.mode != Mode::Train) throw PreconditionError("backward: cache must come from a train-mode forward");
  if (cache.encoder.size() != encoder_.size()) throw PreconditionError("backward: cache layer count mismatch");

  std::vector<std::vector<Matrix>> per_layer(encoder_.size());
  std::vector<Matrix> dec_grads;
  Matrix g = decoder_.backward(cache.decoder, loss_grad, dec_grads);
  for (std::size_t i = encoder_.size(); i-- > 0;) g = encoder_[i]->backward(cache.encoder[i], g, per_layer[i]);

  Gradients out;
  out.names = parameter_names();
  for (auto& lg : per_layer)
    for (auto& m : lg) out.values.push_back(std::move(m));
  for (auto& m : dec_grads) out.values.push_back(std::move(m));
  return out;
}

Matrix Network::encode(const Matrix& x) const {
  if (x.rows() != bands_) throw DimensionError("encode: rows != band count");
  Matrix h = x;
  Matrix abundances;
  bool have = false;
  for (const auto& layer : encoder_) {
    h = layer->infer(h);
    if (layer->kind() == LayerKind::SumToOne) {
      abundances = h;
      have = true;
    }
  }
  return have ? abundances : h;
}

Matrix Network::reconstruct(const Matrix& x) const {
  if (x.rows() != bands_) throw DimensionError("reconstruct: rows != band count");
  Matrix h = x;
  for (const auto& layer : encoder_) h = layer->infer(h);
  return decoder_.infer(h);
}

std::vector<ParameterRef> Network::parameters() {
  ++version_;
  std::vector<ParameterRef> out;
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    auto ps = encoder_[i]->parameters();
    auto names = encoder_[i]->parameter_names();
    for (std::size_t k = 0; k < ps.size(); ++k)
      out.push_back({"encoder." + std::to_string(i) + "." + names[k], ps[k]});
  }
  out.push_back({"decoder.weight", &decoder_.weights()});
  return out;
}

std::vector<const Matrix*> Network::parameters() const {
  std::vector<const Matrix*> out;
  for (const auto& layer : encoder_)
    for (const Matrix* p : static_cast<const Layer&>(*layer).parameters()) out.push_back(p);
  out.push_back(&decoder_.weights());
  return out;
}

std::vector<std::string> Network::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < encoder_.size(); ++i)
    for (const auto& n : encoder_[i]->parameter_names())
      out.push_back("encoder." + std::to_string(i) + "." + n);
  out.push_back("decoder.weight");
  return out;
}

std::vector<ParameterRef> Network::buffers() {
  std::vector<ParameterRef> out;
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    auto bs = encoder_[i]->buffers();
    auto names = encoder_[i]->buffer_names();
    for (std::size_t k = 0; k < bs.size(); ++k)
      out.push_back({"encoder." + std::to_string(i) + "." + names[k], bs[k]});
  }
  return out;
}

std::vector<const Matrix*> Network::buffers() const {
  std::vector<const Matrix*> out;
  for (const auto& layer : encoder_)
    for (const Matrix* b : static_cast<const Layer&>(*layer).buffers()) out.push_back(b);
  return out;
}

Matrix& Network::decoder_weights() {
  ++version_;
  return decoder_.weights();
}

std::uint64_t Network::parameter_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Matrix* p : parameters()) h = fnv1a64(p->data(), p->size() * sizeof(double), h);
  return h;
}

std::vector<std::size_t> Network::encoder_linear_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < encoder_.size(); ++i)
    if (encoder_[i]->kind() == LayerKind::Linear) out.push_back(i);
  return out;
}

}  // namespace aeunmix::nn
