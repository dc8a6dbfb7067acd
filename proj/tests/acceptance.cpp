// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance [criterion numbers...]  (default: all)

#include "pinnuq/cli/config.hpp"
#include "pinnuq/cli/experiment.hpp"
#include "pinnuq/cli/process.hpp"
#include "pinnuq/error.hpp"
#include "pinnuq/hmc.hpp"
#include "pinnuq/inverse.hpp"
#include "pinnuq/stats.hpp"
#include "pinnuq/training.hpp"

#include "fd_burgers.hpp"
#include "fd_jet.hpp"
#include "test_helpers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;
using namespace pinnuq;
using clock_type = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records one check; the criterion passes only if every check does.
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAILED]");
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

fs::path run_root() {
  if (const char* root = std::getenv("PINNUQ_OUTPUT_ROOT"); root && *root) return fs::path(root) / "acceptance";
  return fs::temp_directory_path() / "pinnuq_acceptance";
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

cli::ExperimentConfig desk(cli::ProblemPreset problem, UqMethod method, const std::string& name) {
  cli::ExperimentConfig c = cli::preset_config(problem, method, cli::Scale::Desk);
  c.seed = 1;
  c.output_dir = (run_root() / name).string();
  return c;
}

double metric(const nlohmann::ordered_json& m, const char* key) { return m.at(key).get<double>(); }

// 1. Parameter gradients of the loss and log posterior against central
// differences; jet derivatives against finite differences of the forward pass.
Outcome autodiff_correctness() {
  const auto start = clock_type::now();
  Rng rng(101);
  double loss_err = 0.0, post_err = 0.0, d1_err = 0.0, d2_err = 0.0;
  const HmcConfig hmc;
  for (int trial = 0; trial < 100; ++trial) {
    const PdeProblem problem = trial % 3 == 0   ? burgers_problem()
                               : trial % 3 == 1 ? navier_stokes_problem()
                                                : navier_stokes_inverse_problem();
    const NetworkSpec spec = testing::random_spec(problem, rng);
    const SensorDataset data = testing::small_dataset(problem, 4, rng);
    ParameterVector p = testing::random_params(spec.parameter_count(), rng, 0.6);
    if (problem.infer_lambda) p = extend_parameters(p, {0.9, 0.02});
    const std::vector<double> point = testing::to_std(p);

    const Vector g_loss = loss_and_gradient(spec, p, data, problem, {}).gradient;
    loss_err = std::max(loss_err, fd_check(
                                      [&](std::span<const double> q) {
                                        return loss_and_gradient(spec, testing::from_std(q), data, problem, {}).loss.total;
                                      },
                                      testing::to_std(g_loss), point, 1e-4));
    const Vector g_post = log_posterior_and_gradient(spec, p, data, problem, hmc).gradient;
    post_err = std::max(post_err, fd_check(
                                      [&](std::span<const double> q) {
                                        return log_posterior_and_gradient(spec, testing::from_std(q), data, problem, hmc)
                                            .log_density;
                                      },
                                      testing::to_std(g_post), point, 1e-4));

    std::vector<double> x(spec.input_dim);
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::uniform_real_distribution<double> u(problem.lower[i], problem.upper[i]);
      x[i] = u(rng);
    }
    std::vector<std::size_t> all(spec.input_dim);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const ParameterVector net = problem.infer_lambda ? strip_lambda(spec, p) : p;
    const Jet jet = forward_jet(spec, as_span(net), x, all);
    for (std::size_t k = 0; k < spec.output_dim; ++k) {
      for (std::size_t i = 0; i < spec.input_dim; ++i) {
        const testing::FdJet fd = testing::fd_jet(spec, net, x, k, i);
        d1_err = std::max(d1_err, std::abs(jet.first(k, i) - fd.d1) / std::max(1.0, std::abs(fd.d1)));
        d2_err = std::max(d2_err, std::abs(jet.second_derivative(k, i) - fd.d2) / std::max(1.0, std::abs(fd.d2)));
      }
    }
  }
  const double t = seconds_since(start);
  Outcome o;
  o.check(loss_err < 1e-5, "loss grad rel err " + fmt(loss_err) + " < 1e-5");
  o.check(post_err < 1e-5, "log-posterior grad rel err " + fmt(post_err) + " < 1e-5");
  o.check(d1_err < 1e-6, "jet d1 err " + fmt(d1_err) + " < 1e-6");
  o.check(d2_err < 1e-4, "jet d2 err " + fmt(d2_err) + " < 1e-4");
  o.check(t < 60.0, "runtime " + fmt(t) + " s < 60 s");
  return o;
}

// Navier-Stokes residual from finite differences of the plain forward pass.
std::array<double, 3> fd_ns_residual(const NetworkSpec& spec, const ParameterVector& p, const std::vector<double>& x,
                                     double lambda1, double lambda2) {
  const double h = 1e-3;
  auto d = [&](std::size_t k, std::size_t i) { return testing::fd_jet(spec, p, x, k, i, nullptr, h); };
  const Vector v = forward(spec, as_span(p), x);
  const auto ux = d(0, 0), uy = d(0, 1), ut = d(0, 2), vx = d(1, 0), vy = d(1, 1), vt = d(1, 2);
  const double px = d(2, 0).d1, py = d(2, 1).d1;
  return {ut.d1 + lambda1 * (v(0) * ux.d1 + v(1) * uy.d1) + px - lambda2 * (ux.d2 + uy.d2),
          vt.d1 + lambda1 * (v(0) * vx.d1 + v(1) * vy.d1) + py - lambda2 * (vx.d2 + vy.d2), ux.d1 + vy.d1};
}

// 2. Oracle fidelity.
Outcome oracle_fidelity() {
  Outcome o;
  double ic = 0.0, bc = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double x = -1.0 + 2.0 * i / 200.0;
    ic = std::max(ic, std::abs(burgers_exact(x, 0.0) + std::sin(std::numbers::pi * x)));
    const double t = i / 200.0;
    bc = std::max({bc, std::abs(burgers_exact(-1.0, t)), std::abs(burgers_exact(1.0, t))});
  }
  o.check(ic <= 1e-8, "initial condition err " + fmt(ic) + " <= 1e-8");
  o.check(bc <= 1e-8, "boundary err " + fmt(bc) + " <= 1e-8");

  const std::vector<double> times{0.25, 0.5};
  const testing::FdBurgers fd(1.0 / 2048.0, 2e-5, kBurgersViscosity, times);
  double fd_err = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (int i = 0; i < 10; ++i) {
      const double x = -0.9 + 1.8 * i / 9.0;
      fd_err = std::max(fd_err, std::abs(burgers_exact(x, times[k]) - fd.at(k, x)));
    }
  }
  o.check(fd_err <= 1e-4, "Cole-Hopf vs finite-difference solve at 20 probes " + fmt(fd_err) + " <= 1e-4");

  Rng rng(202);
  const double nu = 0.01;
  double analytic = 0.0;
  std::uniform_real_distribution<double> space(0.0, 2.0 * std::numbers::pi), time(0.0, kTaylorGreenHorizon);
  for (int i = 0; i < 200; ++i) {
    const Jet jet = taylor_green_jet(space(rng), space(rng), time(rng), nu);
    for (double r : navier_stokes_residual(jet, 1.0, nu)) analytic = std::max(analytic, std::abs(r));
  }
  o.check(analytic <= 1e-12, "Taylor-Green analytic residual " + fmt(analytic) + " <= 1e-12");

  // Fit a network to Taylor-Green on a sub-window where a small network reaches 1e-3.
  PdeProblem window = navier_stokes_problem(1.0);
  window.lower = {1.0, 1.0, 0.0};
  window.upper = {1.5, 1.5, 0.5};
  SensorDataset data = generate_sensor_dataset(window, taylor_green_field(nu), 400, 1, 0.0, 0.0, rng);
  data.residual_coords.resize(0, 3);
  data.residual_targets.resize(0, 3);
  const NetworkSpec spec = network_for(window, 2, 20);
  TrainConfig config;
  config.iterations = 4000;
  config.learning_rate = 3e-3;
  TrainResult fit = train_adam(spec, data, window, config, rng);
  config.learning_rate = 3e-4;
  config.iterations = 6000;
  fit = train_adam(spec, data, window, config, rng, fit.params);
  config.learning_rate = 1e-4;
  fit = train_adam(spec, data, window, config, rng, fit.params);

  double fit_err = 0.0, jet_vs_fd = 0.0;
  std::uniform_real_distribution<double> inside(1.05, 1.45), tin(0.05, 0.45);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> x{inside(rng), inside(rng), tin(rng)};
    const TaylorGreenState s = taylor_green_exact(x[0], x[1], x[2], nu);
    const Vector v = forward(spec, as_span(fit.params), x);
    fit_err = std::max({fit_err, std::abs(v(0) - s.u), std::abs(v(1) - s.v)});
    const auto from_jet = navier_stokes_residual(forward_jet(spec, as_span(fit.params), x, {0, 1}), 1.0, nu);
    const auto from_fd = fd_ns_residual(spec, fit.params, x, 1.0, nu);
    for (int k = 0; k < 3; ++k) {
      jet_vs_fd = std::max(jet_vs_fd, std::abs(from_jet[k] - from_fd[k]));
    }
  }
  o.check(fit_err <= 1e-3, "network fit max err " + fmt(fit_err) + " <= 1e-3");
  o.check(jet_vs_fd <= 1e-6, "jet-derived vs FD-derived residual " + fmt(jet_vs_fd) + " <= 1e-6");
  return o;
}

// 3. HMC on a correlated 2-D Gaussian plus leapfrog properties.
Outcome hmc_validity() {
  const auto start = clock_type::now();
  Vector mean(2);
  mean << 0.5, -1.0;
  Matrix cov(2, 2);
  cov << 1.0, 0.8, 0.8, 1.5;
  const Matrix precision = cov.inverse();
  const LogDensity target = [&](const Vector& x) {
    const Vector d = x - mean;
    const Vector g = -(precision * d);
    return DensityValue{0.5 * d.dot(g), g};
  };
  HmcConfig config;
  config.leapfrog_steps = 10;
  config.initial_step_size = 0.1;
  config.burn_in_steps = 500;
  config.n_samples = 2000;
  Rng rng(303);
  const ChainResult chain = hmc_sample_target(target, Vector::Zero(2), config, rng);
  Vector m = Vector::Zero(2);
  for (const auto& s : chain.samples) m += s;
  m /= static_cast<double>(chain.samples.size());
  Matrix c = Matrix::Zero(2, 2);
  for (const auto& s : chain.samples) c += (s - m) * (s - m).transpose();
  c /= static_cast<double>(chain.samples.size() - 1);

  const GradientField grad = [&](const Vector& x) { return target(x).gradient; };
  Vector theta(2), momentum(2);
  theta << 1.3, 0.2;
  momentum << -0.7, 0.4;
  const PhasePoint fwd = leapfrog(theta, momentum, 0.05, 50, grad);
  const PhasePoint back = leapfrog(fwd.theta, -fwd.momentum, 0.05, 50, grad);
  const double reversibility = std::max((back.theta - theta).norm(), (back.momentum + momentum).norm());
  const auto energy = [&](const PhasePoint& s) { return -target(s.theta).log_density + 0.5 * s.momentum.squaredNorm(); };
  const double h0 = energy({theta, momentum});
  const double coarse = std::abs(energy(leapfrog(theta, momentum, 0.1, 10, grad)) - h0);
  const double fine = std::abs(energy(leapfrog(theta, momentum, 0.05, 20, grad)) - h0);
  const double t = seconds_since(start);

  Outcome o;
  o.check((m - mean).norm() < 0.1, "mean err " + fmt((m - mean).norm()) + " < 0.1");
  o.check((c - cov).norm() < 0.15, "covariance Frobenius err " + fmt((c - cov).norm()) + " < 0.15");
  o.check(reversibility < 1e-8, "reversibility " + fmt(reversibility) + " < 1e-8");
  o.check(coarse / fine >= 3.5 && coarse / fine <= 4.5, "|dH| halving ratio " + fmt(coarse / fine) + " in [3.5, 4.5]");
  o.check(t < 120.0, "runtime " + fmt(t) + " s < 120 s");
  return o;
}

// 4. Desk-scale Burgers forward with a deep ensemble.
Outcome burgers_deep_ensemble() {
  const auto start = clock_type::now();
  const auto report = cli::run_experiment(desk(cli::ProblemPreset::BurgersForward, UqMethod::DeepEnsemble, "burgers-de"));
  const double t = seconds_since(start);
  Outcome o;
  o.check(metric(report.metrics, "relative_l2") <= 0.1, "relative L2 " + fmt(metric(report.metrics, "relative_l2")) + " <= 0.1");
  o.check(metric(report.metrics, "coverage_2sigma") >= 0.85,
          "2-sigma coverage " + fmt(metric(report.metrics, "coverage_2sigma")) + " >= 0.85");
  o.check(t < 600.0, "runtime " + fmt(t) + " s < 600 s");
  return o;
}

// 5. Desk-scale HMC on Burgers.
Outcome burgers_hmc() {
  const auto start = clock_type::now();
  const auto report = cli::run_experiment(desk(cli::ProblemPreset::BurgersForward, UqMethod::Hmc, "burgers-hmc"));
  const auto& d = report.metrics.at("diagnostics");
  const double acc = d.at("acceptance_rate").get<double>();
  Outcome o;
  o.check(acc >= 0.4 && acc <= 0.95, "acceptance " + fmt(acc) + " in [0.4, 0.95]");
  o.check(d.at("all_samples_finite").get<bool>(), "all samples finite");
  o.check(report.metrics.at("realizations").get<std::size_t>() == 100, "100 samples");
  o.check(metric(report.metrics, "relative_l2") <= 0.2, "relative L2 " + fmt(metric(report.metrics, "relative_l2")) + " <= 0.2");
  o.detail += " (" + fmt(seconds_since(start)) + " s)";
  return o;
}

// 6. Monte-Carlo dropout sanity.
Outcome mcd_sanity() {
  const auto start = clock_type::now();
  const cli::ExperimentConfig config = desk(cli::ProblemPreset::BurgersForward, UqMethod::McDropout, "burgers-mcd");
  const auto report = cli::run_experiment(config);
  const cli::FitResult fit = cli::load_fit(config, report.output_dir);

  const EvalGrid grid = cli::evaluation_grid(config);
  NetworkSpec plain = fit.spec;
  plain.dropout_rate = 0.0;
  const McdModel deterministic{plain, fit.params.front(), 0.0, {}, {}};
  Rng rng(606);
  const auto passes = mcd_predict_samples(deterministic, grid.columns(), 5, rng);
  const Matrix reference = forward_batch(plain, as_span(fit.params.front()), grid.columns());
  bool bitwise = true;
  for (const auto& p : passes) bitwise = bitwise && p.size() == reference.size() &&
                                         std::memcmp(p.data(), reference.data(), sizeof(double) * p.size()) == 0;

  const double mean_std = metric(report.metrics, "mean_std");
  const double shock = report.metrics.at("regions").at("shock_mean_std").get<double>();
  const double smooth = report.metrics.at("regions").at("smooth_mean_std").get<double>();
  Outcome o;
  o.check(bitwise, "rate 0 passes bitwise equal to deterministic forward");
  o.check(fit.dropout_rate == 0.01 && report.metrics.at("realizations").get<std::size_t>() == 100,
          "rate 0.01 over 100 passes");
  o.check(mean_std > 0.0, "mean std " + fmt(mean_std) + " > 0");
  o.check(shock > smooth, "shock-region std " + fmt(shock) + " > smooth-region std " + fmt(smooth));
  o.detail += " (" + fmt(seconds_since(start)) + " s)";
  return o;
}

// 7. Desk-scale Navier-Stokes inverse problem with a deep ensemble.
Outcome ns_inverse() {
  const auto start = clock_type::now();
  const auto report = cli::run_experiment(desk(cli::ProblemPreset::NsInverse, UqMethod::DeepEnsemble, "ns-inverse-de"));
  const double t = seconds_since(start);
  const auto& l = report.metrics.at("lambda");
  const double l1 = l.at("lambda1_mean").get<double>(), l2 = l.at("lambda2_mean").get<double>();
  const double s1 = l.at("lambda1_std").get<double>(), s2 = l.at("lambda2_std").get<double>();
  Outcome o;
  o.check(l1 >= 0.9 && l1 <= 1.1, "lambda1 " + fmt(l1) + " +- " + fmt(s1) + " in [0.9, 1.1]");
  o.check(l2 >= 0.005 && l2 <= 0.02, "lambda2 " + fmt(l2) + " +- " + fmt(s2) + " within x2 of 0.01");
  o.check(s1 > 0.0 && s2 > 0.0, "DE std > 0");
  o.check(t < 900.0, "runtime " + fmt(t) + " s < 900 s");
  return o;
}

// 8. Statistics closed forms and the Gaussian coverage harness.
Outcome statistics_module() {
  Rng rng(808);
  const double harness = gaussian_coverage_harness(4000, 1000, 0.3, rng);
  const EvalGrid grid = make_grid(ProblemKind::Burgers1D, {linspace(-1.0, 1.0, 50), {0.5}});
  const Matrix f = testing::random_params(50, rng, 2.0).transpose();
  const auto same = predictive_summary(std::vector<Matrix>{f, f}, grid, UqMethod::DeepEnsemble);
  const auto opposite = predictive_summary(std::vector<Matrix>{f, Matrix(-f)}, grid, UqMethod::DeepEnsemble);
  const double eps = std::numeric_limits<double>::epsilon();
  bool exact = same.std.isZero(0.0) && (same.mean - f.transpose()).cwiseAbs().maxCoeff() == 0.0 &&
               opposite.mean.isZero(0.0);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < f.cols(); ++i) {
    const double expected = std::sqrt(2.0) * std::abs(f(0, i));
    worst = std::max(worst, std::abs(opposite.std(i, 0) - expected) / (expected * eps));
  }
  exact = exact && worst <= 2.0;
  Outcome o;
  o.check(std::abs(harness - 0.954) <= 0.02, "Gaussian harness coverage " + fmt(harness) + " = 0.954 +- 0.02");
  o.check(exact, "two-realization closed forms exact (worst " + fmt(worst) + " eps relative)");
  return o;
}

// 9. Byte-identical metrics JSON on rerun, through the library and the executable.
Outcome determinism() {
  Outcome o;
  for (UqMethod method : {UqMethod::DeepEnsemble, UqMethod::McDropout, UqMethod::Hmc}) {
    std::string texts[2];
    for (int rep = 0; rep < 2; ++rep) {
      cli::ExperimentConfig c = desk(cli::ProblemPreset::BurgersForward, method,
                                     "determinism-" + std::string(to_string(method)) + "-" + std::to_string(rep));
      c.data.n_state = c.data.n_residual = 200;
      c.train.iterations = 300;
      c.ensemble.members = 3;
      c.hmc.warm_start_iterations = 300;
      c.hmc.sampler.burn_in_steps = 50;
      c.hmc.sampler.n_samples = 20;
      c.hmc.sampler.leapfrog_steps = 10;
      c.render.enabled = false;
      texts[rep] = slurp(cli::run_experiment(c).output_dir / "metrics.json");
    }
    o.check(!texts[0].empty() && texts[0] == texts[1], std::string(to_string(method)) + " metrics identical");
  }
  std::string texts[2];
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path out = run_root() / ("determinism-tool-" + std::to_string(rep));
    const std::string cmd = std::string(PINNUQ_TOOL_PATH) +
                            " run -p ns-inverse -m de --scale desk --seed 5 --set ensemble.members=2"
                            " --set train.iterations=100 --set render.enabled=false -o " +
                            out.string() + " > /dev/null";
    if (std::system(cmd.c_str()) != 0) {
      o.check(false, "executable run failed");
      return o;
    }
    texts[rep] = slurp(out / "metrics.json");
  }
  o.check(!texts[0].empty() && texts[0] == texts[1], "executable ns-inverse metrics identical");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  cli::configure_allocator();
  const std::vector<Criterion> criteria{
      {1, "autodiff correctness", autodiff_correctness}, {2, "oracle fidelity", oracle_fidelity},
      {3, "HMC sampler validity", hmc_validity},         {4, "desk Burgers deep ensemble", burgers_deep_ensemble},
      {5, "desk Burgers HMC", burgers_hmc},              {6, "MC dropout sanity", mcd_sanity},
      {7, "desk Navier-Stokes inverse", ns_inverse},     {8, "statistics module", statistics_module},
      {9, "determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  fs::create_directories(run_root());
  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("error: ") + e.what());
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
