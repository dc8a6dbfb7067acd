#pragma once

#include "pinnuq/autodiff.hpp"
#include "pinnuq/network.hpp"

#include <span>
#include <vector>

namespace pinnuq {

/// Which derivative channels a jet carries. Channel 0 is the value, channels
/// 1..input_dim the first derivatives (when `first_order`), followed by one
/// pure second-derivative channel per entry of `second`.
struct JetLayout {
  std::size_t input_dim = 0;
  bool first_order = true;
  std::vector<std::size_t> second;

  static JetLayout value_only(std::size_t input_dim) { return {input_dim, false, {}}; }

  void validate() const;
  std::size_t channels() const noexcept { return 1 + (first_order ? input_dim : 0) + second.size(); }
  std::size_t first_channel(std::size_t input) const;
  std::size_t second_channel(std::size_t input) const;
  bool has_second(std::size_t input) const noexcept;
};

/// Network output at one point with its input derivatives.
struct Jet {
  Vector value;                     // output_dim
  Matrix d1;                        // output_dim x input_dim
  Matrix d2;                        // output_dim x second.size()
  std::vector<std::size_t> second;  // input index of each d2 column

  double first(std::size_t output, std::size_t input) const { return d1(output, input); }
  double second_derivative(std::size_t output, std::size_t input) const;
  bool has_second(std::size_t input) const noexcept;
};

/// Jets for a batch of points. `data` is output_dim x (channels * points);
/// channel c of point j sits in column c * points + j.
struct JetBatch {
  JetLayout layout;
  std::size_t points = 0;
  Matrix data;

  auto channel(std::size_t c) const { return data.middleCols(static_cast<Eigen::Index>(c * points), static_cast<Eigen::Index>(points)); }
  Jet at(std::size_t point) const;
};

/// Constant input jet: normalized coordinates plus the seed derivatives of the
/// input map. `inputs` is input_dim x points.
Matrix input_jet(const NetworkSpec& spec, const JetLayout& layout, const Eigen::Ref<const Matrix>& inputs);

JetBatch forward_jet_batch(const NetworkSpec& spec, std::span<const double> params,
                           const Eigen::Ref<const Matrix>& inputs, const JetLayout& layout,
                           const DropoutMask* mask = nullptr);

Jet forward_jet(const NetworkSpec& spec, std::span<const double> params, std::span<const double> point,
                const std::vector<std::size_t>& second_order_indices, const DropoutMask* mask = nullptr);

/// Jet batch recorded on a tape; any component can be pulled out as a taped row.
struct TapedJet {
  Tape* tape = nullptr;
  NodeId node = 0;
  JetLayout layout;
  std::size_t points = 0;

  /// 1 x points row of one output's channel.
  TapedValue component(std::size_t output, std::size_t channel) const;
  TapedValue value(std::size_t output) const { return component(output, 0); }
  TapedValue first(std::size_t output, std::size_t input) const {
    return component(output, layout.first_channel(input));
  }
  TapedValue second(std::size_t output, std::size_t input) const {
    return component(output, layout.second_channel(input));
  }
};

/// Records the whole jet propagation so `Tape::backward` differentiates any
/// jet component with respect to the parameter node. The parameter node may
/// hold extra trailing slots beyond spec.parameter_count(); they are ignored here.
TapedJet record_jet(Tape& tape, NodeId params, const NetworkSpec& spec, const Eigen::Ref<const Matrix>& inputs,
                    const JetLayout& layout, const DropoutMask* mask = nullptr);

/// Same as `forward_jet` but recorded on `tape` against a fresh parameter leaf.
TapedJet forward_jet(const NetworkSpec& spec, std::span<const double> params, std::span<const double> point,
                     const std::vector<std::size_t>& second_order_indices, Tape& tape,
                     const DropoutMask* mask = nullptr);

}  // namespace pinnuq
