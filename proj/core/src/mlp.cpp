#include "pinnuq/mlp.hpp"

#include "pinnuq/error.hpp"
#include "pinnuq/jet.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace pinnuq {

namespace {

Eigen::Index as_index(std::size_t n) { return static_cast<Eigen::Index>(n); }

template <class T>
void write_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "binary format assumes a little-endian host");
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  out.write(bytes.data(), bytes.size());
}

template <class T>
bool read_le(std::istream& in, T& value) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), bytes.size())) return false;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return true;
}

std::size_t record_length(const ParameterFileHeader& h) {
  NetworkSpec spec;
  spec.input_dim = static_cast<std::size_t>(h.input_dim);
  spec.output_dim = static_cast<std::size_t>(h.output_dim);
  spec.hidden_layers = static_cast<std::size_t>(h.hidden_layers);
  spec.hidden_width = static_cast<std::size_t>(h.hidden_width);
  spec.validate();
  return spec.parameter_count() + static_cast<std::size_t>(h.extra_slots);
}

}  // namespace

ParameterVector init_params(const NetworkSpec& spec, Rng& rng) {
  spec.validate();
  ParameterVector params = ParameterVector::Zero(as_index(spec.parameter_count()));
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const LayerShape shape = spec.layer(l);
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(shape.fan_in + shape.fan_out)));
    for (std::size_t k = 0; k < shape.fan_in * shape.fan_out; ++k) params(as_index(shape.weight_offset + k)) = normal(rng);
  }
  return params;
}

Matrix forward_batch(const NetworkSpec& spec, std::span<const double> params, const Eigen::Ref<const Matrix>& inputs,
                     const DropoutMask* mask) {
  return forward_jet_batch(spec, params, inputs, JetLayout::value_only(spec.input_dim), mask).data;
}

Vector forward(const NetworkSpec& spec, std::span<const double> params, std::span<const double> input,
               const DropoutMask* mask) {
  if (input.size() != spec.input_dim) throw ContractError("input dimension does not match network");
  if (params.size() != spec.parameter_count()) throw ContractError("parameter vector length does not match network");
  const Matrix x = Eigen::Map<const Matrix>(input.data(), as_index(input.size()), 1);
  return forward_batch(spec, params, x, mask).col(0);
}

std::vector<Matrix> hidden_activations(const NetworkSpec& spec, std::span<const double> params,
                                       const Eigen::Ref<const Matrix>& inputs) {
  if (params.size() < spec.parameter_count()) throw ContractError("parameter vector shorter than network");
  std::vector<Matrix> out;
  Matrix h = input_jet(spec, JetLayout::value_only(spec.input_dim), inputs);
  for (std::size_t l = 0; l + 1 < spec.layer_count(); ++l) {
    const LayerShape shape = spec.layer(l);
    Eigen::Map<const Matrix> w(params.data() + shape.weight_offset, as_index(shape.fan_out), as_index(shape.fan_in));
    Eigen::Map<const Vector> b(params.data() + shape.bias_offset, as_index(shape.fan_out));
    h = ((w * h).colwise() + b).array().tanh().matrix();
    out.push_back(h);
  }
  return out;
}

ParameterVector pack(const NetworkSpec& spec, const StructuredParameters& layers) {
  if (layers.size() != spec.layer_count()) throw ContractError("layer count does not match network");
  ParameterVector params(as_index(spec.parameter_count()));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerShape shape = spec.layer(l);
    const auto& layer = layers[l];
    if (layer.weights.rows() != as_index(shape.fan_out) || layer.weights.cols() != as_index(shape.fan_in) ||
        layer.bias.size() != as_index(shape.fan_out)) {
      throw ContractError("layer " + std::to_string(l) + " has the wrong shape");
    }
    params.segment(as_index(shape.weight_offset), layer.weights.size()) = layer.weights.reshaped();
    params.segment(as_index(shape.bias_offset), layer.bias.size()) = layer.bias;
  }
  return params;
}

StructuredParameters unpack(const NetworkSpec& spec, const ParameterVector& params) {
  if (params.size() != as_index(spec.parameter_count())) {
    throw ContractError("parameter vector length " + std::to_string(params.size()) + " does not match network (" +
                        std::to_string(spec.parameter_count()) + ")");
  }
  StructuredParameters layers;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const LayerShape shape = spec.layer(l);
    LayerParameters layer;
    layer.weights = params.segment(as_index(shape.weight_offset), as_index(shape.fan_in * shape.fan_out))
                        .reshaped(as_index(shape.fan_out), as_index(shape.fan_in));
    layer.bias = params.segment(as_index(shape.bias_offset), as_index(shape.fan_out));
    layers.push_back(std::move(layer));
  }
  return layers;
}

ParameterFileHeader header_for(const NetworkSpec& spec, std::size_t extra_slots) {
  return {static_cast<std::int32_t>(spec.input_dim), static_cast<std::int32_t>(spec.output_dim),
          static_cast<std::int32_t>(spec.hidden_layers), static_cast<std::int32_t>(spec.hidden_width),
          static_cast<std::int32_t>(extra_slots)};
}

void write_parameter_file(const std::filesystem::path& path, const ParameterFileHeader& header,
                          std::span<const ParameterVector> records) {
  const std::size_t length = record_length(header);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& record : records) {
    if (record.size() != as_index(length)) throw ContractError("parameter record length does not match header");
    write_le(out, header.input_dim);
    write_le(out, header.output_dim);
    write_le(out, header.hidden_layers);
    write_le(out, header.hidden_width);
    write_le(out, header.extra_slots);
    for (Eigen::Index i = 0; i < record.size(); ++i) write_le(out, record(i));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

ParameterFile read_parameter_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  ParameterFile file;
  for (std::size_t index = 0;; ++index) {
    ParameterFileHeader h;
    if (!read_le(in, h.input_dim)) break;
    if (!read_le(in, h.output_dim) || !read_le(in, h.hidden_layers) || !read_le(in, h.hidden_width) ||
        !read_le(in, h.extra_slots)) {
      throw IoError(path.string() + ": truncated header in record " + std::to_string(index));
    }
    if (h.input_dim <= 0 || h.output_dim <= 0 || h.hidden_layers <= 0 || h.hidden_width <= 0 || h.extra_slots < 0) {
      throw SchemaError(path.string() + ": invalid header in record " + std::to_string(index));
    }
    if (index == 0) {
      file.header = h;
    } else if (!(h == file.header)) {
      throw SchemaError(path.string() + ": record " + std::to_string(index) + " header differs from the first");
    }
    ParameterVector v(as_index(record_length(h)));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!read_le(in, v(i))) throw IoError(path.string() + ": truncated record " + std::to_string(index));
    }
    file.records.push_back(std::move(v));
  }
  return file;
}

}  // namespace pinnuq
