#include "pinnuq/hmc.hpp"

#include "pinnuq/error.hpp"
#include "pinnuq/training.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace pinnuq {

namespace {

Eigen::Index as_index(std::size_t n) { return static_cast<Eigen::Index>(n); }

void require_finite(const Vector& v, std::size_t step, const char* what) {
  if (!v.allFinite()) throw DivergenceError(step, std::nan(""), what);
}

// Leapfrog that reuses the density at the start and returns it at the end.
PhasePoint integrate(Vector theta, Vector momentum, double step_size, std::size_t n_steps, const Vector& grad0,
                     const std::function<Vector(const Vector&)>& grad, Vector& grad_end) {
  Vector g = grad0;
  for (std::size_t i = 0; i < n_steps; ++i) {
    momentum += 0.5 * step_size * g;
    theta += step_size * momentum;
    require_finite(theta, i, "leapfrog position became non-finite");
    g = grad(theta);
    require_finite(g, i, "leapfrog gradient became non-finite");
    momentum += 0.5 * step_size * g;
    require_finite(momentum, i, "leapfrog momentum became non-finite");
  }
  grad_end = std::move(g);
  return {std::move(theta), std::move(momentum)};
}

}  // namespace

HmcConfig HmcConfig::burgers_preset() { return {}; }

HmcConfig HmcConfig::navier_stokes_preset() {
  HmcConfig c;
  c.initial_step_size = 0.01;
  c.burn_in_steps = 5000;
  return c;
}

void HmcConfig::validate() const {
  if (leapfrog_steps == 0) throw ConfigError("leapfrog_steps must be positive");
  if (!(initial_step_size > 0.0) || !std::isfinite(initial_step_size)) throw ConfigError("step size must be positive");
  if (n_samples == 0) throw ConfigError("n_samples must be positive");
  const auto [lo, hi] = target_accept_range;
  if (!(lo > 0.0 && lo < hi && hi < 1.0)) throw ConfigError("target acceptance range must satisfy 0 < lo < hi < 1");
  if (!(prior_sigma > 0.0) || !(sigma_u > 0.0) || !(sigma_f > 0.0)) throw ConfigError("scales must be positive");
  if (!(min_burn_in_acceptance >= 0.0 && min_burn_in_acceptance < 1.0)) {
    throw ConfigError("min_burn_in_acceptance must lie in [0, 1)");
  }
}

PhasePoint leapfrog(const Vector& theta, const Vector& momentum, double step_size, std::size_t n_steps,
                    const GradientField& grad_logp) {
  if (!(step_size > 0.0)) throw ContractError("leapfrog step size must be positive");
  if (theta.size() != momentum.size()) throw ContractError("position and momentum sizes differ");
  Vector grad_end;
  return integrate(theta, momentum, step_size, n_steps, grad_logp(theta), grad_logp, grad_end);
}

ChainResult hmc_sample_target(const LogDensity& target, const Vector& init, const HmcConfig& config, Rng& rng) {
  config.validate();
  if (!init.allFinite()) throw ContractError("initial state must be finite");
  DensityValue current = target(init);
  if (!std::isfinite(current.log_density) || !current.gradient.allFinite()) {
    throw DivergenceError(0, current.log_density, "log density is non-finite at the initial state");
  }
  Vector theta = init;
  double step = config.initial_step_size;
  const auto [lo, hi] = config.target_accept_range;
  const std::size_t total = config.burn_in_steps + config.n_samples;

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  // Only the most recent target value is needed to finish a trajectory.
  double last_log_density = 0.0;
  const auto grad = [&](const Vector& x) {
    DensityValue d = target(x);
    last_log_density = d.log_density;
    return std::move(d.gradient);
  };

  ChainResult result;
  result.samples.reserve(config.n_samples);
  std::size_t accepted_burn = 0;
  std::size_t accepted_sample = 0;
  double smoothed = -1.0;
  for (std::size_t it = 0; it < total; ++it) {
    Vector momentum(theta.size());
    for (Eigen::Index i = 0; i < momentum.size(); ++i) momentum(i) = normal(rng);
    const double h_old = -current.log_density + 0.5 * momentum.squaredNorm();

    double accept_prob = 0.0;
    std::optional<DensityValue> proposal;
    Vector proposed_theta;
    try {
      Vector grad_end;
      PhasePoint end = integrate(theta, momentum, step, config.leapfrog_steps, current.gradient, grad, grad_end);
      const double h_new = -last_log_density + 0.5 * end.momentum.squaredNorm();
      if (std::isfinite(h_new)) {
        accept_prob = std::min(1.0, std::exp(h_old - h_new));
        proposal = DensityValue{last_log_density, std::move(grad_end)};
        proposed_theta = std::move(end.theta);
      } else {
        ++result.divergent;
      }
    } catch (const DivergenceError&) {
      ++result.divergent;
    }

    const double u = uniform(rng);
    const bool accept = proposal && u < accept_prob;
    if (accept) {
      theta = std::move(proposed_theta);
      current = std::move(*proposal);
    }

    if (it < config.burn_in_steps) {
      accepted_burn += accept ? 1 : 0;
      smoothed = smoothed < 0.0 ? accept_prob : 0.9 * smoothed + 0.1 * accept_prob;
      if (smoothed > hi) step *= 1.1;
      if (smoothed < lo) step *= 0.9;
    } else {
      accepted_sample += accept ? 1 : 0;
      result.samples.push_back(theta);
      result.log_density.push_back(current.log_density);
    }
  }

  if (config.burn_in_steps > 0) {
    result.burn_in_acceptance_rate =
        static_cast<double>(accepted_burn) / static_cast<double>(config.burn_in_steps);
  }
  if (config.burn_in_steps > 0 && result.burn_in_acceptance_rate < config.min_burn_in_acceptance) {
    throw SamplerError("burn-in acceptance rate " + std::to_string(result.burn_in_acceptance_rate) +
                       " is below the minimum " + std::to_string(config.min_burn_in_acceptance) +
                       " (final step size " + std::to_string(step) + ")");
  }
  result.acceptance_rate = static_cast<double>(accepted_sample) / static_cast<double>(config.n_samples);
  result.final_step_size = step;
  return result;
}

NodeId log_posterior(Tape& tape, NodeId params, const NetworkSpec& spec, const SensorDataset& data,
                     const PdeProblem& problem, const HmcConfig& config, const LambdaPrior& lambda_prior) {
  const ModelTerms terms = record_model_terms(tape, params, spec, data, problem);
  const auto n = as_index(spec.parameter_count());
  const TapedValue weights{tape, ops::sum_squares(tape, ops::block(tape, params, 0, 0, n, 1))};
  TapedValue logp = (-0.5 / (config.sigma_u * config.sigma_u)) * terms.state_sse +
                    (-0.5 / (config.sigma_f * config.sigma_f)) * terms.residual_sse +
                    (-0.5 / (config.prior_sigma * config.prior_sigma)) * weights;
  if (problem.infer_lambda) {
    Matrix mu(2, 1);
    mu << lambda_prior.mean1, lambda_prior.raw_mean2;
    const NodeId centred = ops::add_constant(tape, ops::block(tape, params, n, 0, 2, 1), -mu);
    Matrix inv_var(2, 1);
    inv_var << 1.0 / (lambda_prior.sigma1 * lambda_prior.sigma1), 1.0 / (lambda_prior.sigma2 * lambda_prior.sigma2);
    const TapedValue scaled{tape, ops::mul(tape, centred, tape.constant(inv_var))};
    const TapedValue quad{tape, ops::sum(tape, (scaled * TapedValue{tape, centred}).id())};
    logp = logp + (-0.5) * quad;
  }
  return logp.id();
}

DensityValue log_posterior_and_gradient(const NetworkSpec& spec, const ParameterVector& params,
                                        const SensorDataset& data, const PdeProblem& problem,
                                        const HmcConfig& config, const LambdaPrior& lambda_prior) {
  Tape tape;
  const NodeId p = tape.leaf(as_span(params));
  const NodeId logp = log_posterior(tape, p, spec, data, problem, config, lambda_prior);
  return {tape.scalar(logp), tape.backward(logp)};
}

PosteriorSamples hmc_sample(const NetworkSpec& spec, const SensorDataset& data, const PdeProblem& problem,
                            const HmcConfig& config, const ParameterVector& init, Rng& rng) {
  data.validate(problem);
  const std::size_t expected = spec.parameter_count() + (problem.infer_lambda ? kLambdaSlots : 0);
  if (static_cast<std::size_t>(init.size()) != expected) {
    throw ContractError("initial parameters do not match network and problem");
  }
  const LambdaPrior prior = default_lambda_prior();
  const LogDensity target = [&](const Vector& theta) {
    return log_posterior_and_gradient(spec, theta, data, problem, config, prior);
  };
  ChainResult chain = hmc_sample_target(target, init, config, rng);

  PosteriorSamples out;
  out.spec = spec;
  out.samples = std::move(chain.samples);
  out.log_posterior = std::move(chain.log_density);
  out.acceptance_rate = chain.acceptance_rate;
  out.burn_in_acceptance_rate = chain.burn_in_acceptance_rate;
  out.final_step_size = chain.final_step_size;
  out.divergent = chain.divergent;
  if (problem.infer_lambda) {
    for (const auto& s : out.samples) out.lambda_samples.push_back(lambda_of(spec, s));
  }
  return out;
}

void write_posterior_samples(const std::filesystem::path& binary_path, const std::filesystem::path& sidecar_path,
                             const PosteriorSamples& samples) {
  if (samples.samples.empty()) throw ContractError("no samples to write");
  const std::size_t extra = static_cast<std::size_t>(samples.samples.front().size()) - samples.spec.parameter_count();
  write_parameter_file(binary_path, header_for(samples.spec, extra), samples.samples);

  nlohmann::ordered_json j;
  j["method"] = std::string(to_string(samples.method));
  j["n_samples"] = samples.samples.size();
  j["acceptance_rate"] = samples.acceptance_rate;
  j["burn_in_acceptance_rate"] = samples.burn_in_acceptance_rate;
  j["final_step_size"] = samples.final_step_size;
  j["divergent"] = samples.divergent;
  j["log_posterior"] = samples.log_posterior;
  if (!samples.lambda_samples.empty()) {
    nlohmann::ordered_json lam = nlohmann::ordered_json::array();
    for (const auto& l : samples.lambda_samples) lam.push_back({l[0], l[1]});
    j["lambda_samples"] = lam;
  }
  std::ofstream out(sidecar_path);
  if (!out) throw IoError("cannot open " + sidecar_path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + sidecar_path.string());
}

}  // namespace pinnuq
