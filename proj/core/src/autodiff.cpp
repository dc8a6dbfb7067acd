#include "pinnuq/autodiff.hpp"

#include "pinnuq/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pinnuq {

namespace {

double softplus_value(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::size_t expected_arity(OpKind kind) {
  switch (kind) {
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
      return 2;
    case OpKind::Neg:
    case OpKind::Square:
    case OpKind::Tanh:
    case OpKind::Exp:
    case OpKind::Log:
    case OpKind::Softplus:
      return 1;
    default:
      throw ContractError("record_scalar: op kind is not a scalar primitive");
  }
}

}  // namespace

void Tape::check_operands(std::span<const NodeId> operands) const {
  for (NodeId id : operands) {
    if (id >= nodes_.size()) {
      throw StructuralError("operand id " + std::to_string(id) + " is not on the tape (size " +
                            std::to_string(nodes_.size()) + ")");
    }
  }
}

NodeId Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

NodeId Tape::leaf(double value) {
  Node n{OpKind::Leaf, {}, {}, Matrix::Constant(1, 1, value), {}, true};
  const NodeId id = push(std::move(n));
  leaves_.push_back(id);
  return id;
}

NodeId Tape::leaf(std::span<const double> values) {
  Matrix v(static_cast<Eigen::Index>(values.size()), 1);
  std::copy(values.begin(), values.end(), v.data());
  Node n{OpKind::Leaf, {}, {}, std::move(v), {}, true};
  const NodeId id = push(std::move(n));
  leaves_.push_back(id);
  return id;
}

NodeId Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

NodeId Tape::constant(Matrix value) { return push(Node{OpKind::Constant, {}, {}, std::move(value), {}, false}); }

NodeId Tape::record_scalar(OpKind kind, std::span<const NodeId> operands) {
  check_operands(operands);
  if (operands.size() != expected_arity(kind)) {
    throw StructuralError("record_scalar: wrong operand count");
  }
  for (NodeId id : operands) {
    if (nodes_[id].value.size() != 1) throw StructuralError("record_scalar: operand is not scalar");
  }
  const double a = nodes_[operands[0]].value(0, 0);
  const double b = operands.size() > 1 ? nodes_[operands[1]].value(0, 0) : 0.0;
  double value = 0.0;
  std::vector<double> partials;
  switch (kind) {
    case OpKind::Add:
      value = a + b;
      partials = {1.0, 1.0};
      break;
    case OpKind::Sub:
      value = a - b;
      partials = {1.0, -1.0};
      break;
    case OpKind::Mul:
      value = a * b;
      partials = {b, a};
      break;
    case OpKind::Neg:
      value = -a;
      partials = {-1.0};
      break;
    case OpKind::Square:
      value = a * a;
      partials = {2.0 * a};
      break;
    case OpKind::Tanh: {
      value = std::tanh(a);
      partials = {1.0 - value * value};
      break;
    }
    case OpKind::Exp:
      value = std::exp(a);
      partials = {value};
      break;
    case OpKind::Log:
      value = std::log(a);
      partials = {1.0 / a};
      break;
    case OpKind::Softplus:
      value = softplus_value(a);
      partials = {sigmoid(a)};
      break;
    default:
      break;
  }
  return record_custom(operands, value, partials);
}

NodeId Tape::record_custom(std::span<const NodeId> operands, double value, std::span<const double> partials) {
  check_operands(operands);
  if (partials.size() != operands.size()) throw StructuralError("record_custom: one partial per operand required");
  Node n{OpKind::Custom, {operands.begin(), operands.end()}, {partials.begin(), partials.end()},
         Matrix::Constant(1, 1, value), {}, false};
  for (NodeId id : operands) n.requires_grad = n.requires_grad || nodes_[id].requires_grad;
  return push(std::move(n));
}

NodeId Tape::record_block(std::vector<NodeId> operands, Matrix value, BlockRule rule) {
  check_operands(operands);
  Node n{OpKind::Block, std::move(operands), {}, std::move(value), std::move(rule), false};
  for (NodeId id : n.operands) n.requires_grad = n.requires_grad || nodes_[id].requires_grad;
  return push(std::move(n));
}

const Matrix& Tape::value(NodeId id) const {
  check_operands({&id, 1});
  return nodes_[id].value;
}

double Tape::scalar(NodeId id) const {
  const Matrix& v = value(id);
  if (v.size() != 1) throw ContractError("node is not scalar");
  return v(0, 0);
}

OpKind Tape::kind(NodeId id) const {
  check_operands({&id, 1});
  return nodes_[id].kind;
}

std::span<const NodeId> Tape::operands(NodeId id) const {
  check_operands({&id, 1});
  return nodes_[id].operands;
}

std::span<const double> Tape::partials(NodeId id) const {
  check_operands({&id, 1});
  return nodes_[id].partials;
}

bool Tape::requires_grad(NodeId id) const {
  check_operands({&id, 1});
  return nodes_[id].requires_grad;
}

std::size_t Tape::leaf_dimension() const noexcept {
  std::size_t n = 0;
  for (NodeId id : leaves_) n += static_cast<std::size_t>(nodes_[id].value.size());
  return n;
}

Vector Tape::backward(NodeId seed) const {
  check_operands({&seed, 1});
  if (nodes_[seed].value.size() != 1) throw ContractError("backward: seed node is not scalar");

  AdjointStore adjoints(seed + 1);
  adjoints[seed] = Matrix::Ones(1, 1);
  for (NodeId i = seed + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (adjoints[i].size() == 0 || !node.requires_grad) continue;
    switch (node.kind) {
      case OpKind::Leaf:
      case OpKind::Constant:
        break;
      case OpKind::Block:
        node.rule(*this, adjoints[i], adjoints);
        break;
      default: {
        const double bar = adjoints[i](0, 0);
        for (std::size_t k = 0; k < node.operands.size(); ++k) {
          const NodeId op = node.operands[k];
          if (!nodes_[op].requires_grad) continue;
          ensure_adjoint(adjoints[op], 1, 1)(0, 0) += bar * node.partials[k];
        }
      }
    }
  }

  Vector grad = Vector::Zero(static_cast<Eigen::Index>(leaf_dimension()));
  Eigen::Index offset = 0;
  for (NodeId id : leaves_) {
    const Eigen::Index n = nodes_[id].value.size();
    if (id <= seed && adjoints[id].size() != 0) {
      grad.segment(offset, n) = adjoints[id].reshaped();
    }
    offset += n;
  }
  return grad;
}

namespace ops {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractError(std::string(op) + ": operand shapes differ");
  }
}

}  // namespace

NodeId add(Tape& tape, NodeId a, NodeId b) {
  require_same_shape(tape.value(a), tape.value(b), "add");
  return tape.record_block({a, b}, tape.value(a) + tape.value(b), [a, b](const Tape& t, const Matrix& bar, AdjointStore& adj) {
    if (t.requires_grad(a)) accumulate(adj[a], bar);
    if (t.requires_grad(b)) accumulate(adj[b], bar);
  });
}

NodeId sub(Tape& tape, NodeId a, NodeId b) {
  require_same_shape(tape.value(a), tape.value(b), "sub");
  return tape.record_block({a, b}, tape.value(a) - tape.value(b), [a, b](const Tape& t, const Matrix& bar, AdjointStore& adj) {
    if (t.requires_grad(a)) accumulate(adj[a], bar);
    if (t.requires_grad(b)) accumulate(adj[b], -bar);
  });
}

NodeId mul(Tape& tape, NodeId a, NodeId b) {
  const Matrix& va = tape.value(a);
  const Matrix& vb = tape.value(b);
  if (va.size() == 1 && vb.size() != 1) {
    return tape.record_block({a, b}, va(0, 0) * vb, [a, b](const Tape& t, const Matrix& bar, AdjointStore& adj) {
      if (t.requires_grad(a)) accumulate(adj[a], Matrix::Constant(1, 1, bar.cwiseProduct(t.value(b)).sum()));
      if (t.requires_grad(b)) accumulate(adj[b], t.value(a)(0, 0) * bar);
    });
  }
  if (vb.size() == 1 && va.size() != 1) return mul(tape, b, a);
  require_same_shape(va, vb, "mul");
  return tape.record_block({a, b}, va.cwiseProduct(vb), [a, b](const Tape& t, const Matrix& bar, AdjointStore& adj) {
    if (t.requires_grad(a)) accumulate(adj[a], bar.cwiseProduct(t.value(b)));
    if (t.requires_grad(b)) accumulate(adj[b], bar.cwiseProduct(t.value(a)));
  });
}

NodeId neg(Tape& tape, NodeId a) { return scale(tape, a, -1.0); }

NodeId scale(Tape& tape, NodeId a, double factor) {
  return tape.record_block({a}, factor * tape.value(a), [a, factor](const Tape& t, const Matrix& bar, AdjointStore& adj) {
    if (t.requires_grad(a)) accumulate(adj[a], factor * bar);
  });
}

NodeId add_constant(Tape& tape, NodeId a, const Matrix& c) {
  require_same_shape(tape.value(a), c, "add_constant");
  return tape.record_block({a}, tape.value(a) + c, [a](const Tape& t, const Matrix& bar, AdjointStore& adj) {
    if (t.requires_grad(a)) accumulate(adj[a], bar);
  });
}

NodeId softplus(Tape& tape, NodeId a) {
  const Matrix v = tape.value(a).unaryExpr([](double x) { return softplus_value(x); });
  return tape.record_block({a}, v, [a](const Tape& t, const Matrix& bar, AdjointStore& adj) {
    if (t.requires_grad(a)) {
      accumulate(adj[a], bar.cwiseProduct(t.value(a).unaryExpr([](double x) { return sigmoid(x); })));
    }
  });
}

NodeId sum(Tape& tape, NodeId a) {
  return tape.record_block({a}, Matrix::Constant(1, 1, tape.value(a).sum()),
                           [a](const Tape& t, const Matrix& bar, AdjointStore& adj) {
                             if (!t.requires_grad(a)) return;
                             const Matrix& v = t.value(a);
                             accumulate(adj[a], Matrix::Constant(v.rows(), v.cols(), bar(0, 0)));
                           });
}

NodeId sum_squares(Tape& tape, NodeId a) {
  return tape.record_block({a}, Matrix::Constant(1, 1, tape.value(a).squaredNorm()),
                           [a](const Tape& t, const Matrix& bar, AdjointStore& adj) {
                             if (t.requires_grad(a)) accumulate(adj[a], (2.0 * bar(0, 0)) * t.value(a));
                           });
}

NodeId block(Tape& tape, NodeId a, Eigen::Index row, Eigen::Index col, Eigen::Index rows, Eigen::Index cols) {
  const Matrix& v = tape.value(a);
  if (row < 0 || col < 0 || rows < 0 || cols < 0 || row + rows > v.rows() || col + cols > v.cols()) {
    throw ContractError("block: range outside operand");
  }
  return tape.record_block({a}, v.block(row, col, rows, cols),
                           [a, row, col, rows, cols](const Tape& t, const Matrix& bar, AdjointStore& adj) {
                             if (!t.requires_grad(a)) return;
                             const Matrix& v = t.value(a);
                             ensure_adjoint(adj[a], v.rows(), v.cols()).block(row, col, rows, cols) += bar;
                           });
}

NodeId element(Tape& tape, NodeId a, Eigen::Index index) {
  const Matrix& v = tape.value(a);
  if (index < 0 || index >= v.size()) throw ContractError("element: index out of range");
  const Eigen::Index rows = v.rows();
  return block(tape, a, index % rows, index / rows, 1, 1);
}

}  // namespace ops

std::vector<double> central_difference_gradient(const ScalarFunction& f, std::span<const double> point, double step) {
  if (!(step > 0.0)) throw ContractError("finite-difference step must be positive");
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    auto at = [&](double offset) {
      x[i] = xi + offset;
      return f(x);
    };
    const double fp1 = at(step), fm1 = at(-step), fp2 = at(2.0 * step), fm2 = at(-2.0 * step);
    x[i] = xi;
    grad[i] = (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * step);
  }
  return grad;
}

double fd_check(const ScalarFunction& f, std::span<const double> analytic_gradient, std::span<const double> point,
                double step) {
  if (analytic_gradient.size() != point.size()) throw ContractError("fd_check: gradient and point sizes differ");
  const std::vector<double> fd = central_difference_gradient(f, point, step);
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double a = analytic_gradient[i];
    worst = std::max(worst, std::abs(a - fd[i]) / (std::abs(a) + 1e-12));
  }
  return worst;
}

}  // namespace pinnuq
