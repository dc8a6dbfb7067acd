#include "pinnuq/network.hpp"

#include "pinnuq/error.hpp"
#include "pinnuq/random.hpp"

#include <numbers>

namespace pinnuq {

void NetworkSpec::validate() const {
  if (input_dim == 0 || output_dim == 0) throw ContractError("network needs at least one input and one output");
  if (hidden_layers < 1 || hidden_width < 1) throw ContractError("network needs hidden_layers >= 1 and hidden_width >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ContractError("dropout_rate must lie in [0, 1)");
  if (input_lower.size() != input_upper.size()) throw ContractError("input bounds must have equal length");
  if (!input_lower.empty()) {
    if (input_lower.size() != input_dim) throw ContractError("input bounds must match input_dim");
    for (std::size_t i = 0; i < input_dim; ++i) {
      if (!(input_upper[i] > input_lower[i])) throw ContractError("input upper bound must exceed lower bound");
    }
  }
}

LayerShape NetworkSpec::layer(std::size_t index) const {
  if (index >= layer_count()) throw ContractError("layer index out of range");
  std::size_t offset = 0;
  for (std::size_t l = 0;; ++l) {
    const std::size_t fan_in = l == 0 ? input_dim : hidden_width;
    const std::size_t fan_out = l + 1 == layer_count() ? output_dim : hidden_width;
    if (l == index) return {fan_in, fan_out, offset, offset + fan_in * fan_out};
    offset += fan_in * fan_out + fan_out;
  }
}

std::size_t NetworkSpec::parameter_count() const noexcept {
  const std::size_t first = input_dim * hidden_width + hidden_width;
  const std::size_t middle = (hidden_layers - 1) * (hidden_width * hidden_width + hidden_width);
  const std::size_t last = hidden_width * output_dim + output_dim;
  return first + middle + last;
}

double NetworkSpec::input_scale(std::size_t input) const {
  if (input_lower.empty()) return 1.0;
  return 2.0 / (input_upper.at(input) - input_lower.at(input));
}

double NetworkSpec::input_shift(std::size_t input) const {
  if (input_lower.empty()) return 0.0;
  return -(input_upper.at(input) + input_lower.at(input)) / (input_upper.at(input) - input_lower.at(input));
}

NetworkSpec burgers_network() {
  return NetworkSpec{2, 1, 8, 20, 0.0, {-1.0, 0.0}, {1.0, 1.0}};
}

NetworkSpec ns_forward_network() {
  const double two_pi = 2.0 * std::numbers::pi;
  return NetworkSpec{3, 3, 10, 20, 0.0, {0.0, 0.0, 0.0}, {two_pi, two_pi, 10.0}};
}

NetworkSpec ns_inverse_network() {
  NetworkSpec spec = ns_forward_network();
  spec.hidden_width = 40;
  return spec;
}

std::size_t DropoutMask::kept() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : keep)
    for (auto k : layer) n += k;
  return n;
}

std::size_t DropoutMask::units() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : keep) n += layer.size();
  return n;
}

DropoutMask make_dropout_mask(const NetworkSpec& spec, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ContractError("dropout rate must lie in [0, 1)");
  DropoutMask mask{rate, seed, {}};
  Rng rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  mask.keep.resize(spec.hidden_layers);
  for (auto& layer : mask.keep) {
    layer.resize(spec.hidden_width);
    for (auto& k : layer) k = rate == 0.0 ? 1 : static_cast<std::uint8_t>(keep(rng));
  }
  return mask;
}

}  // namespace pinnuq
