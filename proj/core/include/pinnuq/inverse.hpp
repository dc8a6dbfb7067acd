#pragma once

#include "pinnuq/method.hpp"
#include "pinnuq/mlp.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <vector>

namespace pinnuq {

/// Trailing slots of an inverse parameter vector: (lambda1, raw2) with
/// lambda2 = softplus(raw2) > 0.
inline constexpr std::size_t kLambdaSlots = 2;

using LambdaPair = std::array<double, 2>;

double softplus(double x) noexcept;
/// Inverse of softplus on (0, inf); throws ContractError for y <= 0.
double softplus_inverse(double y);

/// Appends (lambda1, softplus^{-1}(lambda2)) to network parameters.
ParameterVector extend_parameters(const ParameterVector& params, const LambdaPair& lambda_init);
/// Drops the lambda slots; `extended` must hold parameter_count() + kLambdaSlots values.
ParameterVector strip_lambda(const NetworkSpec& spec, const ParameterVector& extended);
/// Physical (lambda1, lambda2) read from an extended vector.
LambdaPair lambda_of(const NetworkSpec& spec, const ParameterVector& extended);

/// Independent Gaussian prior on (lambda1, raw2).
struct LambdaPrior {
  double mean1 = 1.0;
  double sigma1 = 1.0;
  double raw_mean2 = 0.0;  // set from softplus_inverse(0.01) by default_lambda_prior()
  double sigma2 = 1.0;
};

LambdaPrior default_lambda_prior();

struct LambdaEstimate {
  UqMethod method = UqMethod::DeepEnsemble;
  LambdaPair mean{};
  LambdaPair std{};
  std::vector<LambdaPair> raw;
  /// A single value: std is reported as 0.
  bool degenerate = false;
};

/// Mean and unbiased std per component; throws ContractError on empty input.
LambdaEstimate estimate_lambda(UqMethod method, std::span<const LambdaPair> values);
/// Reads lambda from each extended parameter vector (HMC samples or DE members).
LambdaEstimate estimate_lambda(UqMethod method, const NetworkSpec& spec, std::span<const ParameterVector> extended);

/// Header `method,lambda1_mean,lambda1_std,lambda2_mean,lambda2_std`.
void write_lambda_csv(const std::filesystem::path& path, std::span<const LambdaEstimate> estimates);

}  // namespace pinnuq
