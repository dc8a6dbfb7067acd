#include "pinnuq/oracles.hpp"

#include "pinnuq/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

namespace pinnuq {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Index as_index(std::size_t n) { return static_cast<Eigen::Index>(n); }

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, std::size_t line) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && end[-1] == ' ') --end;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end || begin == end) {
    throw ParseError(line, "not a number: '" + text + "'");
  }
  return v;
}

enum class CsvKind { BurgersState, NsState, BurgersResidual, BurgersResidualTargets, NsResidual, NsResidualTargets };

struct CsvSchema {
  CsvKind kind;
  ProblemKind problem;
  std::size_t coord_columns;
  bool state;
  bool targets;
};

const std::map<std::string, CsvSchema>& schemas() {
  static const std::map<std::string, CsvSchema> table{
      {"x,t,u", {CsvKind::BurgersState, ProblemKind::Burgers1D, 2, true, false}},
      {"x,y,t,u,v", {CsvKind::NsState, ProblemKind::NavierStokes2D, 3, true, false}},
      {"x,t", {CsvKind::BurgersResidual, ProblemKind::Burgers1D, 2, false, false}},
      {"x,t,f", {CsvKind::BurgersResidualTargets, ProblemKind::Burgers1D, 2, false, true}},
      {"x,y,t", {CsvKind::NsResidual, ProblemKind::NavierStokes2D, 3, false, false}},
      {"x,y,t,f1,f2,f3", {CsvKind::NsResidualTargets, ProblemKind::NavierStokes2D, 3, false, true}},
  };
  return table;
}

std::size_t residual_dim_of(ProblemKind k) { return k == ProblemKind::Burgers1D ? 1 : 3; }
std::size_t state_dim_of(ProblemKind k) { return k == ProblemKind::Burgers1D ? 1 : 2; }
std::size_t input_dim_of(ProblemKind k) { return k == ProblemKind::Burgers1D ? 2 : 3; }

void write_rows(std::ostream& out, const Matrix& a, const Matrix& b) {
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) out << (c ? "," : "") << format_double(a(r, c));
    for (Eigen::Index c = 0; c < b.cols(); ++c) out << "," << format_double(b(r, c));
    out << '\n';
  }
}

// Orthonormal Hermite polynomials p_0..p_n at z with common rescaling:
// true value = scaled * exp(log_scale). Also returns the Christoffel sum
// sum_{k<n} p_k^2 in the squared scale.
struct HermiteEval {
  double p_n = 0.0;
  double p_nm1 = 0.0;
  double christoffel = 0.0;
  double log_scale = 0.0;
};

HermiteEval orthonormal_hermite(std::size_t n, double z) {
  constexpr double kBig = 1e150;
  HermiteEval e;
  double prev = 0.0;
  double cur = std::pow(kPi, -0.25);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sum += cur * cur;
    const double next = z * std::sqrt(2.0 / static_cast<double>(k + 1)) * cur -
                        std::sqrt(static_cast<double>(k) / static_cast<double>(k + 1)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > kBig) {
      cur /= kBig;
      prev /= kBig;
      sum /= kBig * kBig;
      e.log_scale += std::log(kBig);
    }
  }
  e.p_n = cur;
  e.p_nm1 = prev;
  e.christoffel = sum;
  return e;
}

}  // namespace

QuadratureRule gauss_hermite(std::size_t n) {
  if (n == 0) throw ContractError("Gauss-Hermite rule needs at least one node");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(as_index(n));
  Eigen::VectorXd sub = Eigen::VectorXd::Zero(as_index(n > 1 ? n - 1 : 0));
  for (std::size_t k = 1; k < n; ++k) sub(as_index(k - 1)) = std::sqrt(static_cast<double>(k) / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  rule.log_weights.resize(n);
  const double slope = std::sqrt(2.0 * static_cast<double>(n));  // p_n' = sqrt(2n) p_{n-1}
  for (std::size_t i = 0; i < n; ++i) {
    double z = solver.eigenvalues()(as_index(i));
    for (int iter = 0; iter < 10; ++iter) {
      const HermiteEval e = orthonormal_hermite(n, z);
      const double dz = e.p_n / (slope * e.p_nm1);
      z -= dz;
      if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    const HermiteEval e = orthonormal_hermite(n, z);
    rule.nodes[i] = z;
    rule.log_weights[i] = -(std::log(e.christoffel) + 2.0 * e.log_scale);
    rule.weights[i] = std::exp(rule.log_weights[i]);
  }
  // The exact rule is symmetric about 0.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const std::size_t j = n - 1 - i;
    const double z = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double lw = 0.5 * (rule.log_weights[i] + rule.log_weights[j]);
    rule.nodes[i] = -z;
    rule.nodes[j] = z;
    rule.log_weights[i] = rule.log_weights[j] = lw;
    rule.weights[i] = rule.weights[j] = std::exp(lw);
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

ColeHopfBurgers::ColeHopfBurgers(std::size_t nodes, double nu) : rule_(gauss_hermite(nodes)), nu_(nu) {
  if (nodes < 2) throw ContractError("Cole-Hopf quadrature needs at least two nodes");
  if (!(nu > 0.0)) throw ContractError("viscosity must be positive");
}

double ColeHopfBurgers::operator()(double x, double t) const {
  if (!(x >= -1.0 && x <= 1.0 && t >= 0.0 && t <= 1.0)) {
    throw ContractError("Burgers reference is defined on x in [-1, 1], t in [0, 1]");
  }
  if (t == 0.0) return -std::sin(kPi * x);
  // phi_0(y) = exp(-cos(pi y) / (2 pi nu)); eta = sqrt(4 nu t) z. Terms are
  // combined in log space because phi_0 spans e^{+-50}.
  const double spread = std::sqrt(4.0 * nu_ * t);
  const double inv = 1.0 / (2.0 * kPi * nu_);
  const std::size_t n = rule_.nodes.size();
  std::vector<double> log_terms(n);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    log_terms[i] = rule_.log_weights[i] - std::cos(kPi * (x - spread * rule_.nodes[i])) * inv;
    peak = std::max(peak, log_terms[i]);
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = std::exp(log_terms[i] - peak);
    num += std::sin(kPi * (x - spread * rule_.nodes[i])) * f;
    den += f;
  }
  return -num / den;
}

double burgers_exact(double x, double t) {
  static const ColeHopfBurgers oracle(100);
  return oracle(x, t);
}

TaylorGreenState taylor_green_exact(double x, double y, double t, double nu) {
  const double g = std::exp(-2.0 * nu * t);
  const double gp = std::exp(-4.0 * nu * t);
  return {-std::cos(x) * std::sin(y) * g, std::sin(x) * std::cos(y) * g,
          -0.25 * (std::cos(2.0 * x) + std::cos(2.0 * y)) * gp};
}

Jet taylor_green_jet(double x, double y, double t, double nu) {
  const double g = std::exp(-2.0 * nu * t);
  const double gp = std::exp(-4.0 * nu * t);
  const double cx = std::cos(x), sx = std::sin(x), cy = std::cos(y), sy = std::sin(y);
  const TaylorGreenState s = taylor_green_exact(x, y, t, nu);
  Jet jet;
  jet.second = {0, 1};
  jet.value = Vector(3);
  jet.value << s.u, s.v, s.p;
  jet.d1 = Matrix(3, 3);
  jet.d1 << sx * sy * g, -cx * cy * g, -2.0 * nu * s.u,  //
      cx * cy * g, -sx * sy * g, -2.0 * nu * s.v,        //
      0.5 * std::sin(2.0 * x) * gp, 0.5 * std::sin(2.0 * y) * gp, -4.0 * nu * s.p;
  jet.d2 = Matrix(3, 2);
  jet.d2 << -s.u, -s.u,  //
      -s.v, -s.v,        //
      std::cos(2.0 * x) * gp, std::cos(2.0 * y) * gp;
  return jet;
}

Matrix ExactField::evaluate_rows(const Matrix& coords) const {
  if (static_cast<std::size_t>(coords.cols()) != input_dim) throw ContractError("coordinate columns do not match field");
  Matrix out(coords.rows(), as_index(output_dim));
  std::vector<double> point(input_dim);
  for (Eigen::Index r = 0; r < coords.rows(); ++r) {
    for (std::size_t c = 0; c < input_dim; ++c) point[c] = coords(r, as_index(c));
    out.row(r) = evaluate(point).transpose();
  }
  return out;
}

ExactField burgers_field(std::size_t quadrature_nodes) {
  auto oracle = std::make_shared<ColeHopfBurgers>(quadrature_nodes);
  return {FieldSource::ColeHopf, 2, 1, [oracle](std::span<const double> c) {
            if (c.size() != 2) throw ContractError("Burgers field takes (x, t)");
            Vector v(1);
            v(0) = (*oracle)(c[0], c[1]);
            return v;
          }};
}

ExactField taylor_green_field(double nu) {
  return {FieldSource::TaylorGreen, 3, 3, [nu](std::span<const double> c) {
            if (c.size() != 3) throw ContractError("Taylor-Green field takes (x, y, t)");
            const TaylorGreenState s = taylor_green_exact(c[0], c[1], c[2], nu);
            Vector v(3);
            v << s.u, s.v, s.p;
            return v;
          }};
}

ExactField external_grid_field(const Matrix& coords, const Matrix& values) {
  if (coords.rows() != values.rows()) throw ContractError("coordinate and value rows differ");
  auto table = std::make_shared<std::map<std::vector<double>, Vector>>();
  for (Eigen::Index r = 0; r < coords.rows(); ++r) {
    std::vector<double> key(static_cast<std::size_t>(coords.cols()));
    for (Eigen::Index c = 0; c < coords.cols(); ++c) key[static_cast<std::size_t>(c)] = coords(r, c);
    (*table)[key] = values.row(r).transpose();
  }
  return {FieldSource::ExternalGrid, static_cast<std::size_t>(coords.cols()), static_cast<std::size_t>(values.cols()),
          [table](std::span<const double> c) {
            const auto it = table->find(std::vector<double>(c.begin(), c.end()));
            if (it == table->end()) throw ContractError("coordinate not present in external grid");
            return it->second;
          }};
}

void SensorDataset::validate(const PdeProblem& problem) const {
  if (kind != problem.kind) throw ContractError("dataset kind does not match problem");
  const auto in = as_index(problem.input_dim());
  if (state_coords.cols() != in || residual_coords.cols() != in) throw ContractError("coordinate columns mismatch");
  if (state_values.rows() != state_coords.rows() || state_values.cols() != as_index(problem.state_dim())) {
    throw ContractError("state values shape mismatch");
  }
  if (residual_targets.rows() != residual_coords.rows() ||
      residual_targets.cols() != as_index(problem.residual_dim())) {
    throw ContractError("residual targets shape mismatch");
  }
  for (const Matrix* m : {&state_coords, &residual_coords}) {
    for (Eigen::Index r = 0; r < m->rows(); ++r) {
      std::vector<double> p(m->row(r).size());
      for (Eigen::Index c = 0; c < m->cols(); ++c) p[static_cast<std::size_t>(c)] = (*m)(r, c);
      if (!problem.contains(p)) throw ContractError("dataset point lies outside the problem domain");
    }
  }
}

SensorDataset generate_sensor_dataset(const PdeProblem& problem, const ExactField& exact, std::size_t n_state,
                                      std::size_t n_residual, double sigma_u, double sigma_f, Rng& rng) {
  if (n_state == 0 || n_residual == 0) throw ContractError("sensor counts must be positive");
  if (!(sigma_u >= 0.0 && sigma_f >= 0.0)) throw ContractError("noise scales must be non-negative");
  if (exact.input_dim != problem.input_dim() || exact.output_dim < problem.state_dim()) {
    throw ContractError("exact field does not match problem");
  }
  const std::size_t dim = problem.input_dim();
  SensorDataset data;
  data.kind = problem.kind;
  data.sigma_u = sigma_u;
  data.sigma_f = sigma_f;
  data.seed = rng();

  Rng local(data.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw_coords = [&](std::size_t n) {
    Matrix c(as_index(n), as_index(dim));
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t k = 0; k < dim; ++k) {
        std::uniform_real_distribution<double> u(problem.lower[k], problem.upper[k]);
        c(as_index(r), as_index(k)) = u(local);
      }
    }
    return c;
  };
  data.state_coords = draw_coords(n_state);
  data.residual_coords = draw_coords(n_residual);

  const Matrix exact_values = exact.evaluate_rows(data.state_coords);
  data.state_values = exact_values.leftCols(as_index(problem.state_dim()));
  for (Eigen::Index i = 0; i < data.state_values.size(); ++i) data.state_values(i) += sigma_u * normal(local);
  data.residual_targets = Matrix(as_index(n_residual), as_index(problem.residual_dim()));
  for (Eigen::Index i = 0; i < data.residual_targets.size(); ++i) data.residual_targets(i) = sigma_f * normal(local);
  return data;
}

void write_state_csv(const std::filesystem::path& path, const SensorDataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << (data.kind == ProblemKind::Burgers1D ? "x,t,u" : "x,y,t,u,v") << '\n';
  write_rows(out, data.state_coords, data.state_values);
  if (!out) throw IoError("failed writing " + path.string());
}

void write_residual_csv(const std::filesystem::path& path, const SensorDataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << (data.kind == ProblemKind::Burgers1D ? "x,t,f" : "x,y,t,f1,f2,f3") << '\n';
  write_rows(out, data.residual_coords, data.residual_targets);
  if (!out) throw IoError("failed writing " + path.string());
}

SensorDataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty file, header required");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto found = schemas().find(line);
  if (found == schemas().end()) throw SchemaError(path.string() + ": unknown header '" + line + "'");
  const CsvSchema schema = found->second;
  const std::size_t columns = split_csv_line(line).size();

  std::vector<std::vector<double>> rows;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != columns) {
      throw ParseError(line_no, "expected " + std::to_string(columns) + " columns, found " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(columns);
    for (const auto& f : fields) row.push_back(parse_double(f, line_no));
    rows.push_back(std::move(row));
  }

  SensorDataset data;
  data.kind = schema.problem;
  const auto n = as_index(rows.size());
  const auto in_dim = as_index(input_dim_of(schema.problem));
  Matrix coords(n, in_dim);
  Matrix values(n, as_index(columns) - in_dim);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < in_dim; ++c) coords(r, c) = row[static_cast<std::size_t>(c)];
    for (Eigen::Index c = in_dim; c < as_index(columns); ++c) values(r, c - in_dim) = row[static_cast<std::size_t>(c)];
  }
  if (schema.state) {
    data.state_coords = std::move(coords);
    data.state_values = std::move(values);
    data.residual_coords = Matrix(0, in_dim);
    data.residual_targets = Matrix(0, as_index(residual_dim_of(schema.problem)));
  } else {
    data.state_coords = Matrix(0, in_dim);
    data.state_values = Matrix(0, as_index(state_dim_of(schema.problem)));
    data.residual_coords = std::move(coords);
    data.residual_targets =
        schema.targets ? std::move(values) : Matrix(Matrix::Zero(n, as_index(residual_dim_of(schema.problem))));
  }
  return data;
}

SensorDataset load_dataset_csv(const std::filesystem::path& state_path, const std::filesystem::path& residual_path) {
  SensorDataset state = load_dataset_csv(state_path);
  SensorDataset residual = load_dataset_csv(residual_path);
  if (state.state_coords.rows() == 0 && state.residual_coords.rows() > 0) {
    throw SchemaError(state_path.string() + ": expected a state CSV");
  }
  if (residual.residual_coords.rows() == 0 && residual.state_coords.rows() > 0) {
    throw SchemaError(residual_path.string() + ": expected a residual CSV");
  }
  if (state.kind != residual.kind) throw SchemaError("state and residual CSVs describe different problems");
  state.residual_coords = std::move(residual.residual_coords);
  state.residual_targets = std::move(residual.residual_targets);
  return state;
}

}  // namespace pinnuq
