#include "pinnuq/error.hpp"
#include "pinnuq/oracles.hpp"

#include "fd_burgers.hpp"
#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace pinnuq {
namespace {

constexpr double kPi = std::numbers::pi;

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << contents;
  return path;
}

TEST(GaussHermite, IntegratesPolynomialsExactly) {
  const QuadratureRule rule = gauss_hermite(20);
  double m0 = 0.0, m2 = 0.0, m4 = 0.0, m3 = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double z = rule.nodes[i], w = rule.weights[i];
    m0 += w;
    m2 += w * z * z;
    m3 += w * z * z * z;
    m4 += w * z * z * z * z;
  }
  EXPECT_NEAR(m0, std::sqrt(kPi), 1e-14);
  EXPECT_NEAR(m2, std::sqrt(kPi) / 2.0, 1e-14);
  EXPECT_NEAR(m3, 0.0, 1e-14);
  EXPECT_NEAR(m4, 3.0 * std::sqrt(kPi) / 4.0, 1e-13);
}

TEST(GaussHermite, LogWeightsConsistentAndSymmetric) {
  const QuadratureRule rule = gauss_hermite(100);
  const std::size_t n = rule.nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_DOUBLE_EQ(rule.nodes[i], -rule.nodes[n - 1 - i]);
    if (rule.weights[i] > 1e-300) EXPECT_NEAR(std::log(rule.weights[i]), rule.log_weights[i], 1e-10);
  }
}

TEST(BurgersExact, InitialCondition) {
  for (double x = -1.0; x <= 1.0; x += 0.05) EXPECT_NEAR(burgers_exact(x, 0.0), -std::sin(kPi * x), 1e-10);
}

TEST(BurgersExact, BoundaryCondition) {
  for (double t : {0.05, 0.3, 0.6, 0.99, 1.0}) {
    EXPECT_LT(std::abs(burgers_exact(-1.0, t)), 1e-8);
    EXPECT_LT(std::abs(burgers_exact(1.0, t)), 1e-8);
  }
}

TEST(BurgersExact, Antisymmetric) {
  for (double x : {0.01, 0.1, 0.37, 0.8}) {
    for (double t : {0.2, 0.5, 0.9}) EXPECT_NEAR(burgers_exact(-x, t), -burgers_exact(x, t), 1e-12);
  }
}

TEST(BurgersExact, QuadratureConvergesAwayFromShock) {
  const ColeHopfBurgers coarse(100), fine(200);
  double worst = 0.0;
  for (double x = -1.0; x <= 1.0; x += 0.025) {
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      if (std::abs(x) <= 0.05 && t >= 0.4) continue;
      worst = std::max(worst, std::abs(coarse(x, t) - fine(x, t)));
    }
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(BurgersExact, OutOfDomainThrows) {
  EXPECT_THROW(burgers_exact(1.5, 0.5), ContractError);
  EXPECT_THROW(burgers_exact(0.0, -0.1), ContractError);
  EXPECT_THROW(burgers_exact(0.0, 1.2), ContractError);
}

TEST(BurgersExact, AgreesWithFiniteDifferenceSolve) {
  const std::vector<double> times{0.5};
  const testing::FdBurgers fd(1.0 / 2048.0, 1e-5, kBurgersViscosity, times);
  EXPECT_NEAR(burgers_exact(0.25, 0.5), fd.at(0, 0.25), 1e-4);
  EXPECT_NEAR(burgers_exact(-0.6, 0.5), fd.at(0, -0.6), 1e-4);
}

TEST(TaylorGreen, ClosedFormPoint) {
  const TaylorGreenState s = taylor_green_exact(kPi / 2.0, 0.0, 0.0, 0.01);
  EXPECT_NEAR(s.u, 0.0, 1e-15);
  EXPECT_NEAR(s.v, 1.0, 1e-15);
  EXPECT_NEAR(s.p, 0.0, 1e-15);
  const TaylorGreenState origin = taylor_green_exact(0.0, 0.0, 2.0, 0.01);
  EXPECT_NEAR(origin.p, -0.5 * std::exp(-0.08), 1e-15);
}

TEST(TaylorGreen, JetMatchesFiniteDifferencesAndIsDivergenceFree) {
  const double nu = 0.01, h = 1e-4;
  for (double x : {0.4, 2.0, 5.0}) {
    for (double y : {1.1, 3.3}) {
      const double t = 1.7;
      const Jet jet = taylor_green_jet(x, y, t, nu);
      EXPECT_NEAR(jet.first(0, 0) + jet.first(1, 1), 0.0, 1e-15);
      const auto u = [&](double a, double b, double c) { return taylor_green_exact(a, b, c, nu).u; };
      const auto p = [&](double a, double b, double c) { return taylor_green_exact(a, b, c, nu).p; };
      EXPECT_NEAR(jet.first(0, 0), (u(x + h, y, t) - u(x - h, y, t)) / (2 * h), 1e-8);
      EXPECT_NEAR(jet.first(0, 2), (u(x, y, t + h) - u(x, y, t - h)) / (2 * h), 1e-8);
      EXPECT_NEAR(jet.first(2, 1), (p(x, y + h, t) - p(x, y - h, t)) / (2 * h), 1e-8);
      EXPECT_NEAR(jet.second_derivative(0, 1), (u(x, y + h, t) - 2 * u(x, y, t) + u(x, y - h, t)) / (h * h), 1e-6);
    }
  }
}

TEST(ExactField, EvaluateRowsMatchesPointwise) {
  const ExactField field = taylor_green_field(0.01);
  Matrix coords(2, 3);
  coords << 0.1, 0.2, 0.3, 1.0, 2.0, 3.0;
  const Matrix v = field.evaluate_rows(coords);
  ASSERT_EQ(v.rows(), 2);
  ASSERT_EQ(v.cols(), 3);
  const TaylorGreenState s = taylor_green_exact(1.0, 2.0, 3.0, 0.01);
  EXPECT_EQ(v(1, 0), s.u);
  EXPECT_EQ(v(1, 2), s.p);
  EXPECT_EQ(field.source, FieldSource::TaylorGreen);
}

TEST(ExactField, ExternalGridLooksUpExactCoordinates) {
  Matrix coords(2, 2), values(2, 1);
  coords << 0.0, 0.0, 0.5, 1.0;
  values << 3.0, 4.0;
  const ExactField field = external_grid_field(coords, values);
  const std::vector<double> hit{0.5, 1.0}, miss{0.5, 0.9};
  EXPECT_EQ(field(hit)(0), 4.0);
  EXPECT_THROW(field(miss), ContractError);
}

TEST(SensorData, NoiselessObservationsEqualExact) {
  Rng rng(1);
  const PdeProblem problem = burgers_problem();
  const ExactField exact = burgers_field(40);
  const SensorDataset d = generate_sensor_dataset(problem, exact, 50, 30, 0.0, 0.0, rng);
  EXPECT_EQ(d.n_state(), 50u);
  EXPECT_EQ(d.n_residual(), 30u);
  for (Eigen::Index r = 0; r < d.state_coords.rows(); ++r) {
    const std::vector<double> c{d.state_coords(r, 0), d.state_coords(r, 1)};
    EXPECT_EQ(d.state_values(r, 0), exact(c)(0));
  }
  EXPECT_TRUE((d.residual_targets.array() == 0.0).all());
}

TEST(SensorData, NoiseScaleWithinChiSquareBound) {
  Rng rng(2);
  const PdeProblem problem = burgers_problem();
  const ExactField exact = burgers_field(40);
  const SensorDataset d = generate_sensor_dataset(problem, exact, 2000, 2000, 0.1, 0.1, rng);
  const Vector noise = d.state_values.col(0) - exact.evaluate_rows(d.state_coords).col(0);
  const double mean = noise.mean();
  const double sd = std::sqrt((noise.array() - mean).square().sum() / (noise.size() - 1.0));
  EXPECT_GE(sd, 0.094);
  EXPECT_LE(sd, 0.106);
}

TEST(SensorData, ResidualNoiseIsUncorrelatedAtLagOne) {
  Rng rng(3);
  const SensorDataset d =
      generate_sensor_dataset(navier_stokes_problem(), taylor_green_field(0.01), 10, 3000, 0.1, 0.1, rng);
  const Vector f = d.residual_targets.col(0);
  const double mean = f.mean();
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    den += (f(i) - mean) * (f(i) - mean);
    if (i + 1 < f.size()) num += (f(i) - mean) * (f(i + 1) - mean);
  }
  EXPECT_LT(std::abs(num / den), 3.0 / std::sqrt(static_cast<double>(f.size())));
}

TEST(SensorData, SameSeedSameDatasetAndInsideDomain) {
  const PdeProblem problem = navier_stokes_problem();
  Rng a(42), b(42);
  const SensorDataset da = generate_sensor_dataset(problem, taylor_green_field(0.01), 100, 100, 0.05, 0.1, a);
  const SensorDataset db = generate_sensor_dataset(problem, taylor_green_field(0.01), 100, 100, 0.05, 0.1, b);
  EXPECT_EQ(da.state_coords, db.state_coords);
  EXPECT_EQ(da.state_values, db.state_values);
  EXPECT_EQ(da.residual_targets, db.residual_targets);
  EXPECT_NO_THROW(da.validate(problem));
  for (Eigen::Index r = 0; r < da.state_coords.rows(); ++r) {
    const std::vector<double> c{da.state_coords(r, 0), da.state_coords(r, 1), da.state_coords(r, 2)};
    EXPECT_TRUE(problem.contains(c));
  }
}

TEST(DatasetCsv, ThreeRowFile) {
  const auto path = temp_file("pinnuq_three.csv", "x,t,u\n0.1,0.2,0.3\n-0.5,0.9,1\n0,0,0\n");
  const SensorDataset d = load_dataset_csv(path);
  EXPECT_EQ(d.kind, ProblemKind::Burgers1D);
  EXPECT_EQ(d.n_state(), 3u);
  EXPECT_EQ(d.state_values(1, 0), 1.0);
  std::filesystem::remove(path);
}

TEST(DatasetCsv, TextInNumericColumnNamesLine) {
  const auto path = temp_file("pinnuq_bad.csv", "x,t,u\n0.1,0.2,0.3\n0.1,abc,0.3\n");
  try {
    load_dataset_csv(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::filesystem::remove(path);
}

TEST(DatasetCsv, WrongColumnCountIsParseError) {
  const auto path = temp_file("pinnuq_cols.csv", "x,y,t\n1,2,3\n1,2\n");
  EXPECT_THROW(load_dataset_csv(path), ParseError);
  std::filesystem::remove(path);
}

TEST(DatasetCsv, UnknownHeaderIsSchemaError) {
  const auto path = temp_file("pinnuq_schema.csv", "a,b,c\n1,2,3\n");
  EXPECT_THROW(load_dataset_csv(path), SchemaError);
  std::filesystem::remove(path);
}

TEST(DatasetCsv, WriteThenReadRoundTrips) {
  Rng rng(5);
  const PdeProblem problem = navier_stokes_problem();
  const SensorDataset d = generate_sensor_dataset(problem, taylor_green_field(0.01), 40, 25, 0.05, 0.1, rng);
  const auto dir = std::filesystem::temp_directory_path();
  write_state_csv(dir / "pinnuq_rt_state.csv", d);
  write_residual_csv(dir / "pinnuq_rt_res.csv", d);
  const SensorDataset back = load_dataset_csv(dir / "pinnuq_rt_state.csv", dir / "pinnuq_rt_res.csv");
  EXPECT_EQ(back.kind, d.kind);
  EXPECT_EQ(back.state_coords, d.state_coords);
  EXPECT_EQ(back.state_values, d.state_values);
  EXPECT_EQ(back.residual_coords, d.residual_coords);
  EXPECT_EQ(back.residual_targets, d.residual_targets);
  std::filesystem::remove(dir / "pinnuq_rt_state.csv");
  std::filesystem::remove(dir / "pinnuq_rt_res.csv");
}

TEST(DatasetCsv, MissingFileIsIoError) {
  EXPECT_THROW(load_dataset_csv("/nonexistent/pinnuq.csv"), IoError);
}

}  // namespace
}  // namespace pinnuq
