#pragma once

#include "pinnuq/autodiff.hpp"
#include "pinnuq/network.hpp"
#include "pinnuq/random.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace pinnuq {

/// Flat parameters: per layer the column-major weight block, then the biases.
/// Inverse problems append trailing lambda slots (see inverse.hpp).
using ParameterVector = Vector;

struct LayerParameters {
  Matrix weights;  // fan_out x fan_in
  Vector bias;     // fan_out
};

using StructuredParameters = std::vector<LayerParameters>;

/// Glorot-normal weights (variance 2/(fan_in+fan_out)), zero biases.
ParameterVector init_params(const NetworkSpec& spec, Rng& rng);

/// Output for a single input point.
Vector forward(const NetworkSpec& spec, std::span<const double> params, std::span<const double> input,
               const DropoutMask* mask = nullptr);
/// Outputs for a batch; `inputs` is input_dim x points, the result output_dim x points.
Matrix forward_batch(const NetworkSpec& spec, std::span<const double> params, const Eigen::Ref<const Matrix>& inputs,
                     const DropoutMask* mask = nullptr);

/// Hidden activations of every layer (for boundedness checks); one matrix per hidden layer.
std::vector<Matrix> hidden_activations(const NetworkSpec& spec, std::span<const double> params,
                                       const Eigen::Ref<const Matrix>& inputs);

ParameterVector pack(const NetworkSpec& spec, const StructuredParameters& layers);
StructuredParameters unpack(const NetworkSpec& spec, const ParameterVector& params);

inline std::span<const double> as_span(const ParameterVector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Header of the flat binary parameter format.
struct ParameterFileHeader {
  std::int32_t input_dim = 0;
  std::int32_t output_dim = 0;
  std::int32_t hidden_layers = 0;
  std::int32_t hidden_width = 0;
  std::int32_t extra_slots = 0;

  bool operator==(const ParameterFileHeader&) const = default;
};

ParameterFileHeader header_for(const NetworkSpec& spec, std::size_t extra_slots);

/// One record per vector: 5 little-endian int32 header fields then
/// parameter_count + extra_slots little-endian float64 values.
void write_parameter_file(const std::filesystem::path& path, const ParameterFileHeader& header,
                          std::span<const ParameterVector> records);

struct ParameterFile {
  ParameterFileHeader header;
  std::vector<ParameterVector> records;
};

ParameterFile read_parameter_file(const std::filesystem::path& path);

}  // namespace pinnuq
