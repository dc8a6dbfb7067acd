#pragma once

#include "pinnuq/autodiff.hpp"
#include "pinnuq/jet.hpp"
#include "pinnuq/pde.hpp"
#include "pinnuq/random.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace pinnuq {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  /// log of each weight, accurate even where the weight underflows.
  std::vector<double> log_weights;
};

/// n-point Gauss-Hermite rule for the weight exp(-z^2). Nodes are seeded by
/// Golub-Welsch and polished by Newton; weights come from the Christoffel
/// sum in scaled arithmetic so the far nodes keep full relative accuracy.
QuadratureRule gauss_hermite(std::size_t n);

/// Viscous Burgers on [-1, 1] with u(0, x) = -sin(pi x) and homogeneous
/// Dirichlet boundaries, via the Cole-Hopf transform: u = -2 nu phi_x / phi,
/// with the heat-kernel integral evaluated by Gauss-Hermite quadrature.
class ColeHopfBurgers {
 public:
  explicit ColeHopfBurgers(std::size_t nodes = 100, double nu = kBurgersViscosity);

  double operator()(double x, double t) const;
  std::size_t nodes() const noexcept { return rule_.nodes.size(); }

 private:
  QuadratureRule rule_;
  double nu_;
};

/// Reference Burgers solution with the default 100-node rule.
double burgers_exact(double x, double t);

struct TaylorGreenState {
  double u = 0.0;
  double v = 0.0;
  double p = 0.0;
};

/// Decaying Taylor-Green vortex:
/// u = -cos x sin y e^{-2 nu t}, v = sin x cos y e^{-2 nu t}, p = -(cos 2x + cos 2y) e^{-4 nu t} / 4.
TaylorGreenState taylor_green_exact(double x, double y, double t, double nu);

/// Analytic jet of the Taylor-Green fields over (x, y, t), second derivatives in x and y.
Jet taylor_green_jet(double x, double y, double t, double nu);

enum class FieldSource { ColeHopf, TaylorGreen, ExternalGrid };

/// Deterministic reference field: coordinates -> observed state components
/// (u for Burgers, (u, v, p) for Taylor-Green).
struct ExactField {
  FieldSource source = FieldSource::ColeHopf;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::function<Vector(std::span<const double>)> evaluate;

  Vector operator()(std::span<const double> coords) const { return evaluate(coords); }
  /// Values at many points; `coords` is points x input_dim, result points x output_dim.
  Matrix evaluate_rows(const Matrix& coords) const;
};

ExactField burgers_field(std::size_t quadrature_nodes = 100);
ExactField taylor_green_field(double nu);
/// Field known only at listed points (rows of `coords`); lookup by exact coordinates.
ExactField external_grid_field(const Matrix& coords, const Matrix& values);

/// Noisy observations of the state at `state_coords` plus residual
/// collocation points whose targets are noisy zeros. Rows are points.
struct SensorDataset {
  ProblemKind kind = ProblemKind::Burgers1D;
  Matrix state_coords;      // n_state x input_dim
  Matrix state_values;      // n_state x state_dim
  Matrix residual_coords;   // n_residual x input_dim
  Matrix residual_targets;  // n_residual x residual_dim
  double sigma_u = 0.1;
  double sigma_f = 0.1;
  std::uint64_t seed = 0;

  std::size_t n_state() const noexcept { return static_cast<std::size_t>(state_coords.rows()); }
  std::size_t n_residual() const noexcept { return static_cast<std::size_t>(residual_coords.rows()); }
  /// Throws ContractError when shapes disagree with `problem` or points leave its domain.
  void validate(const PdeProblem& problem) const;
};

/// Uniform sensor placement over the space-time domain, Gaussian noise on the
/// state (sigma_u) and on the zero residual targets (sigma_f).
SensorDataset generate_sensor_dataset(const PdeProblem& problem, const ExactField& exact, std::size_t n_state,
                                      std::size_t n_residual, double sigma_u, double sigma_f, Rng& rng);

/// CSV headers: state `x,t,u` / `x,y,t,u,v`; residual `x,t` / `x,y,t`, optionally
/// with targets `x,t,f` / `x,y,t,f1,f2,f3`.
void write_state_csv(const std::filesystem::path& path, const SensorDataset& data);
void write_residual_csv(const std::filesystem::path& path, const SensorDataset& data);

/// Parses one state or residual CSV (detected from the header).
SensorDataset load_dataset_csv(const std::filesystem::path& path);
/// Parses a state CSV and a residual CSV into one dataset.
SensorDataset load_dataset_csv(const std::filesystem::path& state_path, const std::filesystem::path& residual_path);

}  // namespace pinnuq
