#include "pinnuq/stats.hpp"

#include "pinnuq/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

namespace pinnuq {

namespace {

Eigen::Index as_index(std::size_t n) { return static_cast<Eigen::Index>(n); }

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::size_t compared_outputs(const PredictiveSummary& summary, const Matrix& exact, std::size_t outputs) {
  if (exact.rows() != summary.mean.rows()) throw ContractError("exact field does not match the grid");
  const auto common = static_cast<std::size_t>(std::min(exact.cols(), summary.mean.cols()));
  if (outputs == 0) return common;
  if (outputs > common) throw ContractError("more outputs requested than available");
  return outputs;
}

}  // namespace

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 0) throw ContractError("linspace needs at least one point");
  if (n == 1) return {lo};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  out.back() = hi;
  return out;
}

EvalGrid make_grid(ProblemKind kind, std::vector<std::vector<double>> axes) {
  if (axes.empty()) throw ContractError("grid needs at least one axis");
  std::size_t total = 1;
  for (const auto& a : axes) {
    if (a.empty()) throw ContractError("grid axis is empty");
    total *= a.size();
  }
  EvalGrid grid;
  grid.kind = kind;
  grid.coords.resize(as_index(total), as_index(axes.size()));
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t rest = p;
    for (std::size_t d = 0; d < axes.size(); ++d) {
      grid.coords(as_index(p), as_index(d)) = axes[d][rest % axes[d].size()];
      rest /= axes[d].size();
    }
  }
  grid.axes = std::move(axes);
  return grid;
}

EvalGrid burgers_eval_grid(std::size_t nx, std::size_t nt) {
  return make_grid(ProblemKind::Burgers1D, {linspace(-1.0, 1.0, nx), linspace(0.0, 1.0, nt)});
}

EvalGrid ns_eval_grid(double t, std::size_t nx, std::size_t ny) {
  const double two_pi = 2.0 * std::numbers::pi;
  return make_grid(ProblemKind::NavierStokes2D, {linspace(0.0, two_pi, nx), linspace(0.0, two_pi, ny), {t}});
}

PredictiveSummary predictive_summary(std::span<const Matrix> realizations, const EvalGrid& grid, UqMethod method) {
  if (realizations.empty()) throw ContractError("predictive summary needs at least one realization");
  const Eigen::Index outputs = realizations.front().rows();
  const auto points = as_index(grid.size());
  Matrix sum = Matrix::Zero(outputs, points);
  for (const auto& r : realizations) {
    if (r.rows() != outputs || r.cols() != points) throw ContractError("realization shape does not match grid");
    sum += r;
  }
  const double n = static_cast<double>(realizations.size());
  const Matrix mean = sum / n;
  Matrix ss = Matrix::Zero(outputs, points);
  for (const auto& r : realizations) ss += (r - mean).cwiseAbs2();

  PredictiveSummary s;
  s.method = method;
  s.sample_count = realizations.size();
  s.grid = grid;
  s.mean = mean.transpose();
  s.std = realizations.size() > 1 ? Matrix((ss / (n - 1.0)).cwiseSqrt().transpose())
                                  : Matrix(Matrix::Zero(points, outputs));
  return s;
}

std::vector<Matrix> parameter_realizations(const NetworkSpec& spec, std::span<const ParameterVector> params,
                                           const EvalGrid& grid) {
  const Matrix cols = grid.columns();
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(forward_batch(spec, as_span(p), cols));
  return out;
}

Matrix exact_on_grid(const ExactField& exact, const EvalGrid& grid) {
  if (exact.input_dim != grid.input_dim()) throw ContractError("exact field does not match grid inputs");
  return exact.evaluate_rows(grid.coords);
}

ErrorFields error_fields(const PredictiveSummary& summary, const Matrix& exact, std::size_t outputs) {
  const auto k = as_index(compared_outputs(summary, exact, outputs));
  ErrorFields e;
  const Matrix diff = summary.mean.leftCols(k) - exact.leftCols(k);
  e.abs_error = diff.cwiseAbs();
  e.mean_abs_error = e.abs_error.mean();
  const double denom = exact.leftCols(k).norm();
  e.relative_l2 = denom > 0.0 ? diff.norm() / denom : diff.norm();
  return e;
}

ErrorFields error_fields(const PredictiveSummary& summary, const ExactField& exact, std::size_t outputs) {
  return error_fields(summary, exact_on_grid(exact, summary.grid), outputs);
}

double coverage_fraction(const PredictiveSummary& summary, const Matrix& exact, double k, std::size_t outputs) {
  if (!(k > 0.0)) throw ContractError("coverage multiplier must be positive");
  const auto c = as_index(compared_outputs(summary, exact, outputs));
  const auto covered =
      ((summary.mean.leftCols(c) - exact.leftCols(c)).cwiseAbs().array() <= k * summary.std.leftCols(c).array())
          .count();
  return static_cast<double>(covered) / static_cast<double>(summary.mean.rows() * c);
}

double coverage_fraction(const PredictiveSummary& summary, const ExactField& exact, double k, std::size_t outputs) {
  return coverage_fraction(summary, exact_on_grid(exact, summary.grid), k, outputs);
}

double gaussian_coverage_harness(std::size_t points, std::size_t realizations, double s, Rng& rng) {
  if (points == 0 || realizations < 2 || !(s > 0.0)) throw ContractError("invalid coverage harness parameters");
  std::normal_distribution<double> normal(0.0, s);
  const EvalGrid grid = make_grid(ProblemKind::Burgers1D, {linspace(0.0, 1.0, points), {0.0}});
  std::vector<Matrix> draws(realizations, Matrix(1, as_index(points)));
  for (auto& d : draws) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) d(0, j) = normal(rng);
  }
  Matrix truth(as_index(points), 1);
  for (Eigen::Index j = 0; j < truth.rows(); ++j) truth(j, 0) = normal(rng);
  return coverage_fraction(predictive_summary(draws, grid, UqMethod::DeepEnsemble), truth, 2.0);
}

std::vector<std::string> output_names(ProblemKind kind) {
  return kind == ProblemKind::Burgers1D ? std::vector<std::string>{"u"} : std::vector<std::string>{"u", "v", "p"};
}

void write_field_csv(const std::filesystem::path& path, const EvalGrid& grid, std::span<const std::string> names,
                     const Matrix& values) {
  if (values.rows() != as_index(grid.size()) || values.cols() != as_index(names.size())) {
    throw ContractError("field values do not match grid and column names");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const bool ns = grid.kind == ProblemKind::NavierStokes2D;
  out << (ns ? "x,y,t" : "x,t");
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.coords.cols(); ++c) out << (c ? "," : "") << format_double(grid.coords(r, c));
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << ',' << format_double(values(r, c));
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_summary_csv(const std::filesystem::path& path, const PredictiveSummary& summary) {
  const auto base = output_names(summary.grid.kind);
  if (summary.mean.cols() != as_index(base.size())) throw ContractError("summary outputs do not match problem kind");
  std::vector<std::string> names;
  for (const auto& n : base) names.push_back("mean_" + n);
  for (const auto& n : base) names.push_back("std_" + n);
  Matrix values(summary.mean.rows(), summary.mean.cols() * 2);
  values << summary.mean, summary.std;
  write_field_csv(path, summary.grid, names, values);
}

}  // namespace pinnuq
