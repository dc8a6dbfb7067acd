#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pinnuq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using NodeId = std::size_t;

enum class OpKind : std::uint8_t {
  Leaf,
  Constant,
  Add,
  Sub,
  Mul,
  Neg,
  Square,
  Tanh,
  Exp,
  Log,
  Softplus,
  Custom,
  Block,
};

class Tape;

/// Adjoint store indexed by node id. Entries stay empty (0x0) until first touched.
using AdjointStore = std::vector<Matrix>;

/// Reverse rule of a block node: receives the adjoint of the node's output and
/// accumulates contributions into the adjoints of its operands.
using BlockRule = std::function<void(const Tape&, const Matrix& adjoint, AdjointStore& adjoints)>;

/// Append-only record of a computation. Scalar nodes carry explicit local
/// partials; block nodes (matrix-valued) carry a reverse rule. Every operand
/// precedes its consumer, so one reverse sweep in index order is a valid
/// topological traversal.
class Tape {
 public:
  /// Scalar parameter leaf.
  NodeId leaf(double value);
  /// Column-vector parameter leaf (e.g. a whole ParameterVector).
  NodeId leaf(std::span<const double> values);
  NodeId constant(double value);
  NodeId constant(Matrix value);

  /// Records a scalar primitive; value and local partials follow from `kind`.
  NodeId record_scalar(OpKind kind, std::span<const NodeId> operands);
  NodeId record_scalar(OpKind kind, std::initializer_list<NodeId> operands) {
    return record_scalar(kind, std::span<const NodeId>(operands.begin(), operands.size()));
  }
  /// Scalar node with caller-supplied value and partials.
  NodeId record_custom(std::span<const NodeId> operands, double value, std::span<const double> partials);
  NodeId record_block(std::vector<NodeId> operands, Matrix value, BlockRule rule);

  const Matrix& value(NodeId id) const;
  double scalar(NodeId id) const;
  OpKind kind(NodeId id) const;
  std::span<const NodeId> operands(NodeId id) const;
  std::span<const double> partials(NodeId id) const;
  bool requires_grad(NodeId id) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }
  /// Total number of scalar entries across all leaves.
  std::size_t leaf_dimension() const noexcept;

  /// d(seed)/d(leaf) for every leaf entry, concatenated in leaf creation order.
  /// The seed must be a 1x1 node. The tape is not modified.
  Vector backward(NodeId seed) const;

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> operands;
    std::vector<double> partials;
    Matrix value;
    BlockRule rule;
    bool requires_grad = false;
  };

  void check_operands(std::span<const NodeId> operands) const;
  NodeId push(Node node);

  std::vector<Node> nodes_;
  std::vector<NodeId> leaves_;
};

/// Adds `contribution` into `target`, sizing it on first use.
template <class Derived>
void accumulate(Matrix& target, const Eigen::MatrixBase<Derived>& contribution) {
  if (target.size() == 0) {
    target = contribution;
  } else {
    target += contribution;
  }
}

/// Ensures `target` is a zero matrix of the given shape when still untouched.
inline Matrix& ensure_adjoint(Matrix& target, Eigen::Index rows, Eigen::Index cols) {
  if (target.size() == 0) target = Matrix::Zero(rows, cols);
  return target;
}

namespace ops {

NodeId add(Tape& tape, NodeId a, NodeId b);
NodeId sub(Tape& tape, NodeId a, NodeId b);
/// Elementwise product; either operand may be 1x1 and is then broadcast.
NodeId mul(Tape& tape, NodeId a, NodeId b);
NodeId neg(Tape& tape, NodeId a);
NodeId scale(Tape& tape, NodeId a, double factor);
NodeId add_constant(Tape& tape, NodeId a, const Matrix& c);
NodeId softplus(Tape& tape, NodeId a);
NodeId sum(Tape& tape, NodeId a);
NodeId sum_squares(Tape& tape, NodeId a);
/// Sub-block copy of a node's value.
NodeId block(Tape& tape, NodeId a, Eigen::Index row, Eigen::Index col, Eigen::Index rows, Eigen::Index cols);
NodeId element(Tape& tape, NodeId a, Eigen::Index index);

}  // namespace ops

/// Handle to a taped node with arithmetic operators, so a formula written once
/// can be evaluated on plain doubles or recorded on a tape.
class TapedValue {
 public:
  TapedValue(Tape& tape, NodeId id) : tape_(&tape), id_(id) {}

  NodeId id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  const Matrix& value() const { return tape_->value(id_); }

  friend TapedValue operator+(const TapedValue& a, const TapedValue& b) {
    return {*a.tape_, ops::add(*a.tape_, a.id_, b.id_)};
  }
  friend TapedValue operator-(const TapedValue& a, const TapedValue& b) {
    return {*a.tape_, ops::sub(*a.tape_, a.id_, b.id_)};
  }
  friend TapedValue operator*(const TapedValue& a, const TapedValue& b) {
    return {*a.tape_, ops::mul(*a.tape_, a.id_, b.id_)};
  }
  friend TapedValue operator*(double c, const TapedValue& a) { return {*a.tape_, ops::scale(*a.tape_, a.id_, c)}; }
  friend TapedValue operator*(const TapedValue& a, double c) { return c * a; }
  friend TapedValue operator-(const TapedValue& a) { return {*a.tape_, ops::neg(*a.tape_, a.id_)}; }

 private:
  Tape* tape_;
  NodeId id_;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Five-point central-difference gradient of `f` at `point`.
std::vector<double> central_difference_gradient(const ScalarFunction& f, std::span<const double> point, double step);

/// max_i |analytic_i - fd_i| / (|analytic_i| + 1e-12), with fd from the
/// five-point central stencil at `step`. Zero when both sides vanish.
double fd_check(const ScalarFunction& f, std::span<const double> analytic_gradient, std::span<const double> point,
                double step);

}  // namespace pinnuq
