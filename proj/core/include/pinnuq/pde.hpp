#pragma once

#include "pinnuq/jet.hpp"
#include "pinnuq/network.hpp"

#include <array>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace pinnuq {

enum class ProblemKind { Burgers1D, NavierStokes2D };

inline constexpr double kBurgersViscosity = 0.01 / std::numbers::pi;
/// Time horizon of the Taylor-Green problems.
inline constexpr double kTaylorGreenHorizon = 10.0;

/// Coordinates are (x, t) for Burgers and (x, y, t) for Navier-Stokes.
struct PdeProblem {
  ProblemKind kind = ProblemKind::Burgers1D;
  double lambda1 = 1.0;
  double lambda2 = 0.01;
  double viscosity = kBurgersViscosity;
  std::vector<double> lower;
  std::vector<double> upper;
  /// Lambda is read from the trailing parameter slots instead of lambda1/lambda2.
  bool infer_lambda = false;

  std::size_t input_dim() const noexcept { return kind == ProblemKind::Burgers1D ? 2 : 3; }
  /// Network outputs: u, or (u, v, p).
  std::size_t output_dim() const noexcept { return kind == ProblemKind::Burgers1D ? 1 : 3; }
  /// Observed state components: u, or (u, v).
  std::size_t state_dim() const noexcept { return kind == ProblemKind::Burgers1D ? 1 : 2; }
  std::size_t residual_dim() const noexcept { return kind == ProblemKind::Burgers1D ? 1 : 3; }
  /// Inputs needing pure second derivatives: x, or (x, y).
  std::vector<std::size_t> second_order_inputs() const {
    return kind == ProblemKind::Burgers1D ? std::vector<std::size_t>{0} : std::vector<std::size_t>{0, 1};
  }
  bool contains(std::span<const double> coords) const;
};

/// x in [-1, 1], t in [0, 1], nu = 0.01/pi.
PdeProblem burgers_problem();
/// (x, y) in [0, 2 pi]^2, t in [0, horizon], lambda = (1, 0.01).
PdeProblem navier_stokes_problem(double horizon = kTaylorGreenHorizon);
PdeProblem navier_stokes_inverse_problem(double horizon = kTaylorGreenHorizon);

/// Tanh network over the problem's coordinates with inputs normalized to its domain.
NetworkSpec network_for(const PdeProblem& problem, std::size_t hidden_layers, std::size_t hidden_width,
                        double dropout_rate = 0.0);

using ResidualVector = std::vector<double>;

template <class F>
struct BurgersFields {
  F u, u_x, u_t, u_xx;
};

template <class F>
struct NavierStokesFields {
  F u, u_x, u_y, u_t, u_xx, u_yy;
  F v, v_x, v_y, v_t, v_xx, v_yy;
  F p_x, p_y;
};

/// u_t + u u_x - nu u_xx
template <class F>
F burgers_residual_expr(const BurgersFields<F>& f, double nu) {
  return f.u_t + f.u * f.u_x - nu * f.u_xx;
}

/// x-momentum, y-momentum, continuity. The pressure-gradient term is grad p.
template <class F, class S>
std::array<F, 3> navier_stokes_residual_expr(const NavierStokesFields<F>& f, const S& lambda1, const S& lambda2) {
  return {f.u_t + lambda1 * (f.u * f.u_x + f.v * f.u_y) + f.p_x - lambda2 * (f.u_xx + f.u_yy),
          f.v_t + lambda1 * (f.u * f.v_x + f.v * f.v_y) + f.p_y - lambda2 * (f.v_xx + f.v_yy),
          f.u_x + f.v_y};
}

/// Needs u, u_x, u_t and u_xx (second derivative in input 0).
ResidualVector burgers_residual(const Jet& jet, double nu = kBurgersViscosity);
/// Needs (u, v, p) with first derivatives in (x, y, t) and u, v second derivatives in x and y.
ResidualVector navier_stokes_residual(const Jet& jet, double lambda1, double lambda2);

/// Lambda supplied as taped 1x1 nodes (inverse mode).
struct TapedLambda {
  TapedValue lambda1;
  TapedValue lambda2;
};

/// Residual rows (1 x points each) recorded on the jet's tape. Without
/// `lambda` the problem's fixed lambda values are used.
std::vector<TapedValue> record_residuals(const TapedJet& jet, const PdeProblem& problem,
                                         const std::optional<TapedLambda>& lambda = std::nullopt);

}  // namespace pinnuq
