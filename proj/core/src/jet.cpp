#include "pinnuq/jet.hpp"

#include "pinnuq/error.hpp"

#include <algorithm>

namespace pinnuq {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using ConstVecMap = Eigen::Map<const Vector>;

Eigen::Index as_index(std::size_t n) { return static_cast<Eigen::Index>(n); }

struct ChannelPlan {
  std::vector<Eigen::Index> first;        // channel index per input (first order)
  std::vector<Eigen::Index> second;       // channel index of each second derivative
  std::vector<Eigen::Index> second_from;  // matching first-derivative channel
};

ChannelPlan plan_for(const JetLayout& layout) {
  ChannelPlan plan;
  if (layout.first_order) {
    for (std::size_t i = 0; i < layout.input_dim; ++i) plan.first.push_back(as_index(layout.first_channel(i)));
  }
  for (std::size_t j : layout.second) {
    plan.second.push_back(as_index(layout.second_channel(j)));
    plan.second_from.push_back(as_index(layout.first_channel(j)));
  }
  return plan;
}

Matrix affine_forward(std::span<const double> params, const LayerShape& shape, const Matrix& h, Eigen::Index n) {
  ConstMap w(params.data() + shape.weight_offset, as_index(shape.fan_out), as_index(shape.fan_in));
  ConstVecMap b(params.data() + shape.bias_offset, as_index(shape.fan_out));
  Matrix a = w * h;
  a.leftCols(n).colwise() += b;
  return a;
}

// Vectorizes through exp; absolute error stays at rounding level.
Eigen::ArrayXXd fast_tanh(const Eigen::Ref<const Eigen::ArrayXXd>& x) {
  return 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
}

// h = tanh(a), s = 1 - h^2:
//   value  h
//   first  s * a_i
//   second s * a_jj - 2 h s * a_j^2
Matrix tanh_jet_forward(const Matrix& a, const ChannelPlan& plan, Eigen::Index n) {
  Matrix out(a.rows(), a.cols());
  const Eigen::ArrayXXd h = fast_tanh(a.leftCols(n).array());
  const Eigen::ArrayXXd s = 1.0 - h.square();
  out.leftCols(n) = h.matrix();
  for (Eigen::Index c : plan.first) {
    out.middleCols(c * n, n) = (s * a.middleCols(c * n, n).array()).matrix();
  }
  for (std::size_t k = 0; k < plan.second.size(); ++k) {
    const Eigen::Index q = plan.second[k];
    const Eigen::Index f = plan.second_from[k];
    out.middleCols(q * n, n) =
        (s * a.middleCols(q * n, n).array() - 2.0 * h * s * a.middleCols(f * n, n).array().square()).matrix();
  }
  return out;
}

Matrix tanh_jet_backward(const Matrix& a, const Matrix& out, const Matrix& bar, const ChannelPlan& plan,
                         Eigen::Index n) {
  Matrix grad = Matrix::Zero(a.rows(), a.cols());
  const Eigen::ArrayXXd h = out.leftCols(n).array();
  const Eigen::ArrayXXd s = 1.0 - h.square();
  const Eigen::ArrayXXd ds = -2.0 * h * s;            // d s / d a0
  const Eigen::ArrayXXd dds = -2.0 * s * (1.0 - 3.0 * h.square());  // d (-2 h s) / d a0
  Eigen::ArrayXXd g0 = bar.leftCols(n).array() * s;
  for (Eigen::Index c : plan.first) {
    const auto bc = bar.middleCols(c * n, n).array();
    grad.middleCols(c * n, n).array() += bc * s;
    g0 += bc * a.middleCols(c * n, n).array() * ds;
  }
  for (std::size_t k = 0; k < plan.second.size(); ++k) {
    const Eigen::Index q = plan.second[k];
    const Eigen::Index f = plan.second_from[k];
    const auto bq = bar.middleCols(q * n, n).array();
    const auto af = a.middleCols(f * n, n).array();
    grad.middleCols(q * n, n).array() += bq * s;
    grad.middleCols(f * n, n).array() += bq * 2.0 * ds * af;
    g0 += bq * (a.middleCols(q * n, n).array() * ds + af.square() * dds);
  }
  grad.leftCols(n) = g0.matrix();
  return grad;
}

Eigen::VectorXd mask_factors(const DropoutMask& mask, std::size_t layer, std::size_t width) {
  Eigen::VectorXd f(as_index(width));
  for (std::size_t u = 0; u < width; ++u) f(as_index(u)) = mask.factor(layer, u);
  return f;
}

void check_inputs(const NetworkSpec& spec, const JetLayout& layout, const Eigen::Ref<const Matrix>& inputs) {
  spec.validate();
  layout.validate();
  if (layout.input_dim != spec.input_dim) throw ContractError("jet layout input_dim does not match network");
  if (static_cast<std::size_t>(inputs.rows()) != spec.input_dim) {
    throw ContractError("input rows must equal network input_dim");
  }
}

void check_mask(const NetworkSpec& spec, const DropoutMask* mask) {
  if (mask == nullptr) return;
  if (mask->keep.size() != spec.hidden_layers) throw ContractError("dropout mask does not match network depth");
  for (const auto& layer : mask->keep) {
    if (layer.size() != spec.hidden_width) throw ContractError("dropout mask does not match network width");
  }
}

}  // namespace

void JetLayout::validate() const {
  if (!first_order && !second.empty()) throw ContractError("second derivatives require first-order channels");
  for (std::size_t j : second) {
    if (j >= input_dim) throw ContractError("second-derivative index out of range");
  }
}

std::size_t JetLayout::first_channel(std::size_t input) const {
  if (!first_order || input >= input_dim) throw ContractError("jet has no first-derivative channel for this input");
  return 1 + input;
}

std::size_t JetLayout::second_channel(std::size_t input) const {
  const auto it = std::find(second.begin(), second.end(), input);
  if (it == second.end()) throw ContractError("jet has no second-derivative channel for this input");
  return 1 + (first_order ? input_dim : 0) + static_cast<std::size_t>(it - second.begin());
}

bool JetLayout::has_second(std::size_t input) const noexcept {
  return std::find(second.begin(), second.end(), input) != second.end();
}

double Jet::second_derivative(std::size_t output, std::size_t input) const {
  const auto it = std::find(second.begin(), second.end(), input);
  if (it == second.end()) throw ContractError("jet has no second derivative for this input");
  return d2(as_index(output), it - second.begin());
}

bool Jet::has_second(std::size_t input) const noexcept {
  return std::find(second.begin(), second.end(), input) != second.end();
}

Jet JetBatch::at(std::size_t point) const {
  if (point >= points) throw ContractError("jet point index out of range");
  const Eigen::Index rows = data.rows();
  const auto col = [&](std::size_t c) { return data.col(as_index(c * points + point)); };
  Jet jet;
  jet.value = col(0);
  jet.d1 = Matrix::Zero(rows, as_index(layout.input_dim));
  if (layout.first_order) {
    for (std::size_t i = 0; i < layout.input_dim; ++i) jet.d1.col(as_index(i)) = col(layout.first_channel(i));
  }
  jet.second = layout.second;
  jet.d2 = Matrix(rows, as_index(layout.second.size()));
  for (std::size_t k = 0; k < layout.second.size(); ++k) {
    jet.d2.col(as_index(k)) = col(layout.second_channel(layout.second[k]));
  }
  return jet;
}

Matrix input_jet(const NetworkSpec& spec, const JetLayout& layout, const Eigen::Ref<const Matrix>& inputs) {
  check_inputs(spec, layout, inputs);
  const Eigen::Index n = inputs.cols();
  Matrix h = Matrix::Zero(inputs.rows(), as_index(layout.channels()) * n);
  for (std::size_t i = 0; i < spec.input_dim; ++i) {
    const Eigen::Index r = as_index(i);
    h.row(r).head(n) = (spec.input_scale(i) * inputs.row(r).array() + spec.input_shift(i)).matrix();
    if (layout.first_order) {
      h.row(r).segment(as_index(layout.first_channel(i)) * n, n).setConstant(spec.input_scale(i));
    }
  }
  return h;
}

JetBatch forward_jet_batch(const NetworkSpec& spec, std::span<const double> params,
                           const Eigen::Ref<const Matrix>& inputs, const JetLayout& layout, const DropoutMask* mask) {
  if (params.size() < spec.parameter_count()) throw ContractError("parameter vector shorter than network");
  check_mask(spec, mask);
  const Eigen::Index n = inputs.cols();
  const ChannelPlan plan = plan_for(layout);
  Matrix h = input_jet(spec, layout, inputs);
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    Matrix a = affine_forward(params, spec.layer(l), h, n);
    if (l + 1 == spec.layer_count()) {
      h = std::move(a);
      break;
    }
    h = tanh_jet_forward(a, plan, n);
    if (mask != nullptr) h = (mask_factors(*mask, l, spec.hidden_width).asDiagonal() * h).eval();
  }
  return JetBatch{layout, static_cast<std::size_t>(n), std::move(h)};
}

Jet forward_jet(const NetworkSpec& spec, std::span<const double> params, std::span<const double> point,
                const std::vector<std::size_t>& second_order_indices, const DropoutMask* mask) {
  if (point.size() != spec.input_dim) throw ContractError("input point dimension does not match network");
  const Matrix x = Eigen::Map<const Matrix>(point.data(), as_index(point.size()), 1);
  return forward_jet_batch(spec, params, x, JetLayout{spec.input_dim, true, second_order_indices}, mask).at(0);
}

TapedValue TapedJet::component(std::size_t output, std::size_t channel) const {
  const auto n = as_index(points);
  return {*tape, ops::block(*tape, node, as_index(output), as_index(channel) * n, 1, n)};
}

TapedJet record_jet(Tape& tape, NodeId params, const NetworkSpec& spec, const Eigen::Ref<const Matrix>& inputs,
                    const JetLayout& layout, const DropoutMask* mask) {
  const std::size_t total = static_cast<std::size_t>(tape.value(params).size());
  if (tape.value(params).cols() != 1 || total < spec.parameter_count()) {
    throw ContractError("parameter node must be a column at least parameter_count() long");
  }
  check_mask(spec, mask);
  const Eigen::Index n = inputs.cols();
  const ChannelPlan plan = plan_for(layout);
  NodeId h = tape.constant(input_jet(spec, layout, inputs));

  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const LayerShape shape = spec.layer(l);
    Matrix a_value = affine_forward({tape.value(params).data(), total}, shape, tape.value(h), n);
    const NodeId a = tape.record_block(
        {params, h}, std::move(a_value),
        [params, h, shape, n, total](const Tape& t, const Matrix& bar, AdjointStore& adj) {
          const Matrix& hv = t.value(h);
          const double* p = t.value(params).data();
          if (t.requires_grad(params)) {
            Matrix& gp = ensure_adjoint(adj[params], as_index(total), 1);
            Eigen::Map<Matrix> gw(gp.data() + shape.weight_offset, as_index(shape.fan_out), as_index(shape.fan_in));
            gw.noalias() += bar * hv.transpose();
            Eigen::Map<Vector> gb(gp.data() + shape.bias_offset, as_index(shape.fan_out));
            gb += bar.leftCols(n).rowwise().sum();
          }
          if (t.requires_grad(h)) {
            ConstMap w(p + shape.weight_offset, as_index(shape.fan_out), as_index(shape.fan_in));
            accumulate(adj[h], w.transpose() * bar);
          }
        });
    if (l + 1 == spec.layer_count()) {
      h = a;
      break;
    }
    const NodeId self = tape.size();
    h = tape.record_block({a}, tanh_jet_forward(tape.value(a), plan, n),
                          [a, self, plan, n](const Tape& t, const Matrix& bar, AdjointStore& adj) {
                            accumulate(adj[a], tanh_jet_backward(t.value(a), t.value(self), bar, plan, n));
                          });
    if (mask != nullptr) {
      const Eigen::VectorXd f = mask_factors(*mask, l, spec.hidden_width);
      const NodeId in = h;
      h = tape.record_block({in}, f.asDiagonal() * tape.value(in),
                            [in, f](const Tape&, const Matrix& bar, AdjointStore& adj) {
                              accumulate(adj[in], f.asDiagonal() * bar);
                            });
    }
  }
  return TapedJet{&tape, h, layout, static_cast<std::size_t>(n)};
}

TapedJet forward_jet(const NetworkSpec& spec, std::span<const double> params, std::span<const double> point,
                     const std::vector<std::size_t>& second_order_indices, Tape& tape, const DropoutMask* mask) {
  if (point.size() != spec.input_dim) throw ContractError("input point dimension does not match network");
  if (params.size() != spec.parameter_count()) throw ContractError("parameter vector length does not match network");
  const NodeId p = tape.leaf(params);
  const Matrix x = Eigen::Map<const Matrix>(point.data(), as_index(point.size()), 1);
  return record_jet(tape, p, spec, x, JetLayout{spec.input_dim, true, second_order_indices}, mask);
}

}  // namespace pinnuq
