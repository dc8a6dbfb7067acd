#pragma once

#include "pinnuq/method.hpp"
#include "pinnuq/mlp.hpp"
#include "pinnuq/oracles.hpp"
#include "pinnuq/pde.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pinnuq {

/// Regular lattice over the problem coordinates. Point order is row-major
/// with the first coordinate fastest: index = i_x + n_x * (i_y + n_y * i_t).
/// A fixed axis (single value) is allowed, e.g. one time instant.
struct EvalGrid {
  ProblemKind kind = ProblemKind::Burgers1D;
  std::vector<std::vector<double>> axes;  // one list of values per input
  Matrix coords;                          // points x input_dim

  std::size_t size() const noexcept { return static_cast<std::size_t>(coords.rows()); }
  std::size_t input_dim() const noexcept { return axes.size(); }
  /// input_dim x points, the layout expected by forward_batch.
  Matrix columns() const { return coords.transpose(); }
};

/// Evenly spaced lattice; `axes[i]` is the list of values of input i.
EvalGrid make_grid(ProblemKind kind, std::vector<std::vector<double>> axes);
std::vector<double> linspace(double lo, double hi, std::size_t n);
/// 256 x 100 over x in [-1, 1], t in [0, 1].
EvalGrid burgers_eval_grid(std::size_t nx = 256, std::size_t nt = 100);
/// 100 x 50 spatial lattice over [0, 2 pi]^2 at time `t`.
EvalGrid ns_eval_grid(double t, std::size_t nx = 100, std::size_t ny = 50);

struct PredictiveSummary {
  UqMethod method = UqMethod::DeepEnsemble;
  std::size_t sample_count = 0;
  EvalGrid grid;
  Matrix mean;  // points x outputs
  Matrix std;   // points x outputs, unbiased; zero for a single realization
};

/// Pointwise mean and unbiased std over realizations, each output_dim x points.
PredictiveSummary predictive_summary(std::span<const Matrix> realizations, const EvalGrid& grid, UqMethod method);

/// One forward pass per parameter vector (HMC samples, DE members); extra trailing slots are ignored.
std::vector<Matrix> parameter_realizations(const NetworkSpec& spec, std::span<const ParameterVector> params,
                                           const EvalGrid& grid);

struct ErrorFields {
  Matrix abs_error;  // points x compared outputs, |mean - exact|
  double mean_abs_error = 0.0;
  /// |mean - exact|_2 / |exact|_2 over all compared entries.
  double relative_l2 = 0.0;
};

/// Exact values on the grid: points x exact.output_dim.
Matrix exact_on_grid(const ExactField& exact, const EvalGrid& grid);

/// Compares the first `outputs` columns (0 = all columns both sides have).
ErrorFields error_fields(const PredictiveSummary& summary, const Matrix& exact, std::size_t outputs = 0);
ErrorFields error_fields(const PredictiveSummary& summary, const ExactField& exact, std::size_t outputs = 0);

/// Fraction of compared entries with |mean - exact| <= k std. Throws ContractError unless k > 0.
double coverage_fraction(const PredictiveSummary& summary, const Matrix& exact, double k = 2.0,
                         std::size_t outputs = 0);
double coverage_fraction(const PredictiveSummary& summary, const ExactField& exact, double k = 2.0,
                         std::size_t outputs = 0);

/// Coverage when the truth is one more independent draw of the realization
/// distribution N(0, s^2): returns the 2-sigma coverage over `points` points.
double gaussian_coverage_harness(std::size_t points, std::size_t realizations, double s, Rng& rng);

/// Output names: u, or u, v, p.
std::vector<std::string> output_names(ProblemKind kind);

/// Coordinates followed by the named value columns, one row per grid point.
void write_field_csv(const std::filesystem::path& path, const EvalGrid& grid, std::span<const std::string> names,
                     const Matrix& values);
/// `x[,y],t,mean_u[,mean_v,mean_p],std_u[,std_v,std_p]`.
void write_summary_csv(const std::filesystem::path& path, const PredictiveSummary& summary);

}  // namespace pinnuq
