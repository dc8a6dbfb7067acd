#include "pinnuq/autodiff.hpp"
#include "pinnuq/error.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace pinnuq {
namespace {

TEST(RecordScalar, AddHasUnitPartials) {
  Tape tape;
  const NodeId a = tape.leaf(2.0);
  const NodeId b = tape.leaf(3.0);
  const NodeId c = tape.record_scalar(OpKind::Add, {a, b});
  EXPECT_EQ(tape.size(), 3u);
  EXPECT_EQ(tape.scalar(c), 5.0);
  ASSERT_EQ(tape.partials(c).size(), 2u);
  EXPECT_EQ(tape.partials(c)[0], 1.0);
  EXPECT_EQ(tape.partials(c)[1], 1.0);
}

TEST(RecordScalar, TanhAtZero) {
  Tape tape;
  const NodeId x = tape.leaf(0.0);
  const NodeId y = tape.record_scalar(OpKind::Tanh, {x});
  EXPECT_EQ(tape.scalar(y), 0.0);
  EXPECT_EQ(tape.partials(y)[0], 1.0);
}

TEST(RecordScalar, MulProductRule) {
  Tape tape;
  const NodeId a = tape.leaf(2.0);
  const NodeId b = tape.leaf(3.0);
  const NodeId c = tape.record_scalar(OpKind::Mul, {a, b});
  EXPECT_EQ(tape.scalar(c), 6.0);
  EXPECT_EQ(tape.partials(c)[0], 3.0);
  EXPECT_EQ(tape.partials(c)[1], 2.0);
}

TEST(RecordScalar, GrowsTapeByOne) {
  Tape tape;
  const NodeId a = tape.leaf(1.5);
  for (int i = 0; i < 5; ++i) {
    const std::size_t before = tape.size();
    tape.record_scalar(OpKind::Exp, {a});
    EXPECT_EQ(tape.size(), before + 1);
  }
}

TEST(RecordScalar, UnknownOperandIsStructuralError) {
  Tape tape;
  tape.leaf(1.0);
  EXPECT_THROW(tape.record_scalar(OpKind::Add, {0, 7}), StructuralError);
  EXPECT_THROW(tape.record_scalar(OpKind::Tanh, {0, 0}), StructuralError);
}

TEST(RecordScalar, UnaryPartialsMatchFiniteDifferences) {
  const struct {
    OpKind kind;
    double (*f)(double);
  } cases[] = {
      {OpKind::Tanh, [](double x) { return std::tanh(x); }},
      {OpKind::Exp, [](double x) { return std::exp(x); }},
      {OpKind::Log, [](double x) { return std::log(x); }},
      {OpKind::Square, [](double x) { return x * x; }},
      {OpKind::Neg, [](double x) { return -x; }},
      {OpKind::Softplus, [](double x) { return std::log1p(std::exp(x)); }},
  };
  for (const auto& c : cases) {
    for (double x : {0.3, 1.7, 2.9}) {
      Tape tape;
      const NodeId id = tape.record_scalar(c.kind, {tape.leaf(x)});
      const double h = 1e-5;
      const double fd = (c.f(x + h) - c.f(x - h)) / (2.0 * h);
      EXPECT_NEAR(tape.scalar(id), c.f(x), 1e-14);
      EXPECT_NEAR(tape.partials(id)[0], fd, 1e-8 * (1.0 + std::abs(fd)));
    }
  }
}

TEST(Backward, SumOfSquares) {
  Tape tape;
  const NodeId a = tape.leaf(1.0);
  const NodeId b = tape.leaf(2.0);
  const NodeId c = tape.leaf(3.0);
  const NodeId s = tape.record_scalar(
      OpKind::Add, {tape.record_scalar(OpKind::Add, {tape.record_scalar(OpKind::Square, {a}),
                                                     tape.record_scalar(OpKind::Square, {b})}),
                    tape.record_scalar(OpKind::Square, {c})});
  const Vector g = tape.backward(s);
  ASSERT_EQ(g.size(), 3);
  EXPECT_EQ(g(0), 2.0);
  EXPECT_EQ(g(1), 4.0);
  EXPECT_EQ(g(2), 6.0);
}

TEST(Backward, TanhOfZeroWeightGivesInput) {
  Tape tape;
  const double x = 0.7;
  const NodeId w = tape.leaf(0.0);
  const NodeId y = tape.record_scalar(OpKind::Tanh, {tape.record_scalar(OpKind::Mul, {w, tape.constant(x)})});
  const Vector g = tape.backward(y);
  ASSERT_EQ(g.size(), 1);
  EXPECT_DOUBLE_EQ(g(0), x);
}

TEST(Backward, NonScalarSeedIsContractError) {
  Tape tape;
  const std::vector<double> v{1.0, 2.0};
  const NodeId leaf = tape.leaf(v);
  EXPECT_THROW(tape.backward(leaf), ContractError);
}

TEST(Backward, LeavesTapeUnchangedAndIsRepeatable) {
  Tape tape;
  const std::vector<double> v{0.4, -1.2, 2.0};
  const NodeId p = tape.leaf(v);
  const NodeId s = ops::sum_squares(tape, ops::softplus(tape, p));
  const std::size_t size = tape.size();
  const Vector g1 = tape.backward(s);
  const Vector g2 = tape.backward(s);
  EXPECT_EQ(tape.size(), size);
  EXPECT_EQ(g1, g2);
}

TEST(Backward, VisitsSharedSubexpressionOnce) {
  // y = x * x through a shared node: dy/dx = 2x exactly once per path.
  Tape tape;
  const NodeId x = tape.leaf(1.5);
  const NodeId t = tape.record_scalar(OpKind::Exp, {x});
  const NodeId y = tape.record_scalar(OpKind::Mul, {t, t});
  EXPECT_NEAR(tape.backward(y)(0), 2.0 * std::exp(3.0), 1e-12);
}

TEST(Backward, IsLinearInTheSeed) {
  Rng rng(5);
  const std::vector<double> v = testing::to_std(testing::random_params(6, rng));
  Tape tape;
  const NodeId p = tape.leaf(v);
  const NodeId l1 = ops::sum_squares(tape, p);
  const NodeId l2 = ops::sum(tape, ops::softplus(tape, p));
  const double a = 0.3, b = -2.5;
  const NodeId combo = ops::add(tape, ops::scale(tape, l1, a), ops::scale(tape, l2, b));
  const Vector expected = a * tape.backward(l1) + b * tape.backward(l2);
  EXPECT_LT((tape.backward(combo) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Ops, MulBroadcastsScalar) {
  Tape tape;
  const NodeId s = tape.leaf(2.0);
  const std::vector<double> v{1.0, 2.0, 3.0};
  const NodeId row = tape.leaf(v);
  const NodeId prod = ops::sum(tape, ops::mul(tape, s, row));
  EXPECT_EQ(tape.scalar(prod), 12.0);
  const Vector g = tape.backward(prod);
  EXPECT_EQ(g(0), 6.0);
  EXPECT_EQ(g(1), 2.0);
  EXPECT_EQ(g(3), 2.0);
}

TEST(Ops, BlockAndElementRouteAdjoints) {
  Tape tape;
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const NodeId p = tape.leaf(v);
  const NodeId e = ops::element(tape, p, 2);
  const NodeId b = ops::sum_squares(tape, ops::block(tape, p, 0, 0, 2, 1));
  const Vector g = tape.backward(ops::add(tape, e, b));
  EXPECT_EQ(g(0), 2.0);
  EXPECT_EQ(g(1), 4.0);
  EXPECT_EQ(g(2), 1.0);
  EXPECT_EQ(g(3), 0.0);
}

TEST(TapedValueOps, FormulaEvaluatesLikeDoubles) {
  Tape tape;
  const TapedValue a{tape, tape.leaf(1.25)};
  const TapedValue b{tape, tape.leaf(-0.5)};
  const TapedValue r = a * b - 3.0 * a + (-b);
  EXPECT_DOUBLE_EQ(r.value()(0, 0), 1.25 * -0.5 - 3.0 * 1.25 + 0.5);
  const Vector g = tape.backward(r.id());
  EXPECT_DOUBLE_EQ(g(0), -0.5 - 3.0);
  EXPECT_DOUBLE_EQ(g(1), 1.25 - 1.0);
}

TEST(FdCheck, QuadraticIsExact) {
  const ScalarFunction f = [](std::span<const double> x) { return 3.0 * x[0] * x[0] + x[0] * x[1] - 2.0 * x[1]; };
  const std::vector<double> point{0.7, -1.3};
  const std::vector<double> grad{6.0 * 0.7 - 1.3, 0.7 - 2.0};
  EXPECT_LT(fd_check(f, grad, point, 1e-5), 1e-8);
}

TEST(FdCheck, ZeroFunctionGivesZero) {
  const ScalarFunction f = [](std::span<const double>) { return 0.0; };
  const std::vector<double> point{1.0, 2.0, 3.0};
  const std::vector<double> grad{0.0, 0.0, 0.0};
  EXPECT_EQ(fd_check(f, grad, point, 1e-4), 0.0);
}

TEST(FdCheck, DetectsWrongGradient) {
  const ScalarFunction f = [](std::span<const double> x) { return x[0] * x[0]; };
  const std::vector<double> point{1.0};
  const std::vector<double> grad{2.1};
  EXPECT_GT(fd_check(f, grad, point, 1e-4), 0.04);
}

TEST(FdCheck, TapedCompositeMatches) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> x = testing::to_std(testing::random_params(5, rng));
    const auto record = [](Tape& tape, std::span<const double> p) {
      const NodeId v = tape.leaf(p);
      const NodeId t = ops::softplus(tape, ops::mul(tape, v, v));
      return ops::add(tape, ops::sum_squares(tape, t), ops::sum(tape, ops::mul(tape, ops::element(tape, v, 0), v)));
    };
    Tape tape;
    const NodeId out = record(tape, x);
    const Vector g = tape.backward(out);
    const ScalarFunction f = [&](std::span<const double> p) {
      Tape t;
      return t.scalar(record(t, p));
    };
    EXPECT_LT(fd_check(f, testing::to_std(g), x, 1e-4), 1e-7) << "trial " << trial;
  }
}

TEST(CentralDifference, ExactForCubic) {
  const ScalarFunction f = [](std::span<const double> x) { return x[0] * x[0] * x[0]; };
  const std::vector<double> point{2.0};
  EXPECT_NEAR(central_difference_gradient(f, point, 1e-2)[0], 12.0, 1e-10);
}

}  // namespace
}  // namespace pinnuq
