#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pinnuq {

/// Shape of one affine layer inside the flat parameter vector. Weights are a
/// column-major fan_out x fan_in block followed by fan_out biases.
struct LayerShape {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

/// Fully connected tanh network: input -> hidden_layers x hidden_width -> output.
/// Inputs are mapped affinely from [input_lower, input_upper] onto [-1, 1]
/// before the first layer; empty bounds mean the identity map.
struct NetworkSpec {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  std::size_t hidden_layers = 1;
  std::size_t hidden_width = 1;
  double dropout_rate = 0.0;
  std::vector<double> input_lower;
  std::vector<double> input_upper;

  void validate() const;
  std::size_t layer_count() const noexcept { return hidden_layers + 1; }
  LayerShape layer(std::size_t index) const;
  std::size_t parameter_count() const noexcept;
  double input_scale(std::size_t input) const;
  double input_shift(std::size_t input) const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Burgers forward: (x, t) -> u, 8 x 20.
NetworkSpec burgers_network();
/// Navier-Stokes forward: (x, y, t) -> (u, v, p), 10 x 20.
NetworkSpec ns_forward_network();
/// Navier-Stokes inverse: (x, y, t) -> (u, v, p), 10 x 40.
NetworkSpec ns_inverse_network();

/// Per-hidden-unit keep flags for one dropout realization. Kept units are
/// scaled by 1/(1 - rate); the output layer is never masked.
struct DropoutMask {
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::uint8_t>> keep;  // [hidden layer][unit]

  double factor(std::size_t layer, std::size_t unit) const {
    return keep[layer][unit] ? 1.0 / (1.0 - rate) : 0.0;
  }
  std::size_t kept() const noexcept;
  std::size_t units() const noexcept;
};

/// Draws a mask for every hidden unit of `spec`; identical seeds give identical masks.
DropoutMask make_dropout_mask(const NetworkSpec& spec, double rate, std::uint64_t seed);

}  // namespace pinnuq
