#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "aeunmix/matrix.hpp"

namespace aeunmix::nn {

// He (Kaiming) and Glorot (Xavier) initializers, normal and uniform.
enum class InitScheme { HeNormal, HeUniform, GlorotNormal, GlorotUniform };

// Short tags KHN, KHU, XGN, XGU.
std::string_view to_string(InitScheme scheme);
// Accepts the short tags (any case) and snake_case long names.
InitScheme parse_init_scheme(std::string_view text);

struct LinearInit {
  Matrix weights;  // fan_out x fan_in
  Matrix bias;     // fan_out x 1
};

// Glorot uniform bound sqrt(6 / (fan_in + fan_out)).
double glorot_uniform_bound(std::size_t fan_in, std::size_t fan_out);
double glorot_normal_std(std::size_t fan_in, std::size_t fan_out);
double he_normal_std(std::size_t fan_in);
// He uniform as shipped by mainstream frameworks: kaiming_uniform with
// a = sqrt(5), i.e. gain^2 = 2 / (1 + 5), bound sqrt(6 / ((1 + 5) fan_in)) =
// 1 / sqrt(fan_in). Biases are U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
double he_uniform_bound(std::size_t fan_in);
double he_uniform_bias_bound(std::size_t fan_in);

// Draws weights and bias for one dense layer. Biases are zero except for
// HeUniform. Deterministic in `seed`.
LinearInit init_weights(InitScheme scheme, std::size_t fan_in, std::size_t fan_out,
                        std::uint64_t seed);

}  // namespace aeunmix::nn
