#include "pinnuq/pde.hpp"

#include "pinnuq/error.hpp"

namespace pinnuq {

namespace {

void require_columns(const Jet& jet, std::size_t outputs, std::size_t inputs, std::span<const std::size_t> second) {
  if (static_cast<std::size_t>(jet.value.size()) < outputs) throw ContractError("jet has too few outputs");
  if (static_cast<std::size_t>(jet.d1.cols()) != inputs) throw ContractError("jet has the wrong number of inputs");
  for (std::size_t j : second) {
    if (!jet.has_second(j)) throw ContractError("jet is missing a second-derivative column");
  }
}

}  // namespace

bool PdeProblem::contains(std::span<const double> coords) const {
  if (coords.size() != lower.size()) return false;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!(coords[i] >= lower[i] && coords[i] <= upper[i])) return false;
  }
  return true;
}

PdeProblem burgers_problem() {
  PdeProblem p;
  p.kind = ProblemKind::Burgers1D;
  p.lower = {-1.0, 0.0};
  p.upper = {1.0, 1.0};
  return p;
}

PdeProblem navier_stokes_problem(double horizon) {
  if (!(horizon > 0.0)) throw ContractError("time horizon must be positive");
  PdeProblem p;
  p.kind = ProblemKind::NavierStokes2D;
  p.lambda1 = 1.0;
  p.lambda2 = 0.01;
  const double two_pi = 2.0 * std::numbers::pi;
  p.lower = {0.0, 0.0, 0.0};
  p.upper = {two_pi, two_pi, horizon};
  return p;
}

PdeProblem navier_stokes_inverse_problem(double horizon) {
  PdeProblem p = navier_stokes_problem(horizon);
  p.infer_lambda = true;
  return p;
}

NetworkSpec network_for(const PdeProblem& problem, std::size_t hidden_layers, std::size_t hidden_width,
                        double dropout_rate) {
  NetworkSpec spec{problem.input_dim(), problem.output_dim(), hidden_layers, hidden_width, dropout_rate,
                   problem.lower, problem.upper};
  spec.validate();
  return spec;
}

ResidualVector burgers_residual(const Jet& jet, double nu) {
  const std::size_t second[] = {0};
  require_columns(jet, 1, 2, second);
  const BurgersFields<double> f{jet.value(0), jet.first(0, 0), jet.first(0, 1), jet.second_derivative(0, 0)};
  return {burgers_residual_expr(f, nu)};
}

ResidualVector navier_stokes_residual(const Jet& jet, double lambda1, double lambda2) {
  const std::size_t second[] = {0, 1};
  require_columns(jet, 3, 3, second);
  const NavierStokesFields<double> f{
      jet.value(0),   jet.first(0, 0), jet.first(0, 1), jet.first(0, 2), jet.second_derivative(0, 0),
      jet.second_derivative(0, 1),
      jet.value(1),   jet.first(1, 0), jet.first(1, 1), jet.first(1, 2), jet.second_derivative(1, 0),
      jet.second_derivative(1, 1),
      jet.first(2, 0), jet.first(2, 1)};
  const auto r = navier_stokes_residual_expr(f, lambda1, lambda2);
  return {r.begin(), r.end()};
}

std::vector<TapedValue> record_residuals(const TapedJet& jet, const PdeProblem& problem,
                                         const std::optional<TapedLambda>& lambda) {
  if (jet.layout.input_dim != problem.input_dim()) throw ContractError("jet does not match problem inputs");
  if (problem.kind == ProblemKind::Burgers1D) {
    const BurgersFields<TapedValue> f{jet.value(0), jet.first(0, 0), jet.first(0, 1), jet.second(0, 0)};
    return {burgers_residual_expr(f, problem.viscosity)};
  }
  const NavierStokesFields<TapedValue> f{
      jet.value(0),    jet.first(0, 0), jet.first(0, 1), jet.first(0, 2), jet.second(0, 0), jet.second(0, 1),
      jet.value(1),    jet.first(1, 0), jet.first(1, 1), jet.first(1, 2), jet.second(1, 0), jet.second(1, 1),
      jet.first(2, 0), jet.first(2, 1)};
  if (lambda) {
    const auto r = navier_stokes_residual_expr(f, lambda->lambda1, lambda->lambda2);
    return {r.begin(), r.end()};
  }
  const auto r = navier_stokes_residual_expr(f, problem.lambda1, problem.lambda2);
  return {r.begin(), r.end()};
}

}  // namespace pinnuq
