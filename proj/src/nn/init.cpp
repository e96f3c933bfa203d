#include "aeunmix/nn/init.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "aeunmix/errors.hpp"
#include "aeunmix/seeding.hpp"

namespace aeunmix::nn {

std::string_view to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::HeNormal: return "KHN";
    case InitScheme::HeUniform: return "KHU";
    case InitScheme::GlorotNormal: return "XGN";
    case InitScheme::GlorotUniform: return "XGU";
  }
  return "?";
}

InitScheme parse_init_scheme(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "khn" || t == "he_normal" || t == "kaiming_normal") return InitScheme::HeNormal;
  if (t == "khu" || t == "he_uniform" || t == "kaiming_uniform") return InitScheme::HeUniform;
  if (t == "xgn" || t == "glorot_normal" || t == "xavier_normal") return InitScheme::GlorotNormal;
  if (t == "xgu" || t == "glorot_uniform" || t == "xavier_uniform") return InitScheme::GlorotUniform;
  throw ConfigError("unknown init scheme '" + std::string(text) + "' (expected KHN, KHU, XGN or XGU)");
}

double glorot_uniform_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / double(fan_in + fan_out));
}
double glorot_normal_std(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(2.0 / double(fan_in + fan_out));
}
double he_normal_std(std::size_t fan_in) { return std::sqrt(2.0 / double(fan_in)); }
double he_uniform_bound(std::size_t fan_in) { return std::sqrt(6.0 / ((1.0 + 5.0) * double(fan_in))); }
double he_uniform_bias_bound(std::size_t fan_in) { return 1.0 / std::sqrt(double(fan_in)); }

LinearInit init_weights(InitScheme scheme, std::size_t fan_in, std::size_t fan_out,
                        std::uint64_t seed) {
  if (fan_in < 1 || fan_out < 1) throw PreconditionError("init_weights: fan_in and fan_out must be >= 1");
  LinearInit out{Matrix(fan_out, fan_in), Matrix(fan_out, 1)};
  Rng rng(seed);

  auto fill_normal = [&](Matrix& m, double sd) {
    std::normal_distribution<double> d(0.0, sd);
    for (double& v : m.values()) v = d(rng);
  };
  auto fill_uniform = [&](Matrix& m, double bound) {
    std::uniform_real_distribution<double> d(-bound, bound);
    for (double& v : m.values()) v = d(rng);
  };

  switch (scheme) {
    case InitScheme::HeNormal:
      fill_normal(out.weights, he_normal_std(fan_in));
      break;
    case InitScheme::HeUniform:
      fill_uniform(out.weights, he_uniform_bound(fan_in));
      fill_uniform(out.bias, he_uniform_bias_bound(fan_in));
      break;
    case InitScheme::GlorotNormal:
      fill_normal(out.weights, glorot_normal_std(fan_in, fan_out));
      break;
    case InitScheme::GlorotUniform:
      fill_uniform(out.weights, glorot_uniform_bound(fan_in, fan_out));
      break;
  }
  return out;
}

}  // namespace aeunmix::nn
