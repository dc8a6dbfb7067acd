#pragma once

#include "pinnuq/inverse.hpp"
#include "pinnuq/method.hpp"
#include "pinnuq/mlp.hpp"
#include "pinnuq/oracles.hpp"
#include "pinnuq/pde.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <vector>

namespace pinnuq {

struct HmcConfig {
  std::size_t leapfrog_steps = 50;
  double initial_step_size = 0.1;
  std::size_t burn_in_steps = 1000;
  std::size_t n_samples = 100;
  /// Burn-in adaptation keeps a smoothed acceptance probability inside this range.
  std::array<double, 2> target_accept_range{0.6, 0.9};
  double prior_sigma = 1.0;
  /// Likelihood noise scales for state and residual misfits.
  double sigma_u = 0.1;
  double sigma_f = 0.1;
  /// Burn-in acceptance below this aborts the chain.
  double min_burn_in_acceptance = 0.01;

  static HmcConfig burgers_preset();
  static HmcConfig navier_stokes_preset();
  void validate() const;
};

struct DensityValue {
  double log_density = 0.0;
  Vector gradient;
};

using LogDensity = std::function<DensityValue(const Vector&)>;
using GradientField = std::function<Vector(const Vector&)>;

struct PhasePoint {
  Vector theta;
  Vector momentum;
};

/// Half kick, full drift, half kick, repeated n_steps times with a unit mass
/// matrix. `grad_logp` is the gradient of the log density. Throws
/// DivergenceError when the state becomes non-finite.
PhasePoint leapfrog(const Vector& theta, const Vector& momentum, double step_size, std::size_t n_steps,
                    const GradientField& grad_logp);

struct ChainResult {
  std::vector<Vector> samples;
  std::vector<double> log_density;
  /// Fraction of accepted proposals after burn-in.
  double acceptance_rate = 0.0;
  double burn_in_acceptance_rate = 0.0;
  double final_step_size = 0.0;
  std::size_t divergent = 0;
};

/// HMC on an arbitrary differentiable log density. Throws SamplerError when
/// burn-in acceptance falls below config.min_burn_in_acceptance.
ChainResult hmc_sample_target(const LogDensity& target, const Vector& init, const HmcConfig& config, Rng& rng);

/// -SSE_u/(2 sigma_u^2) - SSE_f/(2 sigma_f^2) - |theta|^2/(2 sigma_prior^2), plus the
/// lambda prior in inverse mode; additive constants omitted. Returns a 1x1 node.
NodeId log_posterior(Tape& tape, NodeId params, const NetworkSpec& spec, const SensorDataset& data,
                     const PdeProblem& problem, const HmcConfig& config,
                     const LambdaPrior& lambda_prior = default_lambda_prior());

DensityValue log_posterior_and_gradient(const NetworkSpec& spec, const ParameterVector& params,
                                        const SensorDataset& data, const PdeProblem& problem,
                                        const HmcConfig& config,
                                        const LambdaPrior& lambda_prior = default_lambda_prior());

struct PosteriorSamples {
  NetworkSpec spec;
  UqMethod method = UqMethod::Hmc;
  std::vector<ParameterVector> samples;
  std::vector<double> log_posterior;
  double acceptance_rate = 0.0;
  double burn_in_acceptance_rate = 0.0;
  double final_step_size = 0.0;
  std::size_t divergent = 0;
  /// Inverse mode only, one per sample.
  std::vector<LambdaPair> lambda_samples;
};

/// One chain over the (possibly lambda-extended) parameter vector starting at `init`.
PosteriorSamples hmc_sample(const NetworkSpec& spec, const SensorDataset& data, const PdeProblem& problem,
                            const HmcConfig& config, const ParameterVector& init, Rng& rng);

/// Samples in the binary parameter format plus a JSON sidecar with chain statistics.
void write_posterior_samples(const std::filesystem::path& binary_path, const std::filesystem::path& sidecar_path,
                             const PosteriorSamples& samples);

}  // namespace pinnuq
