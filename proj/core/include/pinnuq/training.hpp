#pragma once

#include "pinnuq/inverse.hpp"
#include "pinnuq/mlp.hpp"
#include "pinnuq/oracles.hpp"
#include "pinnuq/pde.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace pinnuq {

struct LossWeights {
  double state = 1.0;
  double residual = 1.0;
};

struct TrainConfig {
  std::size_t iterations = 5000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  LossWeights weights;
  /// Starting lambda for inverse problems (ignored otherwise).
  LambdaPair lambda_init{1.0, 0.01};

  /// Throws ConfigError unless iterations > 0, weights > 0 and the Adam constants are in range.
  void validate() const;
};

/// Sums of squared misfits recorded on a tape; shared by the loss and the log posterior.
struct ModelTerms {
  TapedValue state_sse;
  TapedValue residual_sse;
  std::size_t state_count = 0;     // number of squared entries in state_sse
  std::size_t residual_count = 0;  // number of squared entries in residual_sse
};

/// Records state and residual misfits for the parameter node `params`. When
/// `problem.infer_lambda` the node must carry the kLambdaSlots trailing slots.
ModelTerms record_model_terms(Tape& tape, NodeId params, const NetworkSpec& spec, const SensorDataset& data,
                              const PdeProblem& problem, const DropoutMask* mask = nullptr);

struct TapedLoss {
  NodeId total = 0;
  NodeId state_mse = 0;
  NodeId residual_mse = 0;
};

/// w_u * MSE(state) + w_f * MSE(residual - target). Throws ContractError when
/// the dataset holds no points at all.
TapedLoss pinn_loss(Tape& tape, NodeId params, const NetworkSpec& spec, const SensorDataset& data,
                    const PdeProblem& problem, const LossWeights& weights, const DropoutMask* mask = nullptr);

struct LossValue {
  double total = 0.0;
  double state = 0.0;
  double residual = 0.0;
};

struct LossGradient {
  LossValue loss;
  Vector gradient;
};

LossGradient loss_and_gradient(const NetworkSpec& spec, const ParameterVector& params, const SensorDataset& data,
                               const PdeProblem& problem, const LossWeights& weights,
                               const DropoutMask* mask = nullptr);

class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t dimension, const TrainConfig& config);

  /// One bias-corrected step; a zero gradient leaves `params` unchanged.
  void step(ParameterVector& params, const Vector& gradient);
  std::size_t steps() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  Vector m_, v_;
  std::size_t t_ = 0;
};

struct LossTraceRow {
  std::size_t iteration = 0;
  double total = 0.0;
  double state = 0.0;
  double residual = 0.0;
};

struct TrainResult {
  ParameterVector params;
  std::vector<LossTraceRow> trace;
  /// Lambda after each step (inverse problems only).
  std::vector<LambdaPair> lambda_trace;
};

/// Full-batch Adam. Without `init` the start is a Glorot draw from `rng`
/// (extended with config.lambda_init for inverse problems). When
/// spec.dropout_rate > 0 a fresh mask is drawn from `rng` each iteration.
/// Throws DivergenceError on a non-finite loss.
TrainResult train_adam(const NetworkSpec& spec, const SensorDataset& data, const PdeProblem& problem,
                       const TrainConfig& config, Rng& rng, const std::optional<ParameterVector>& init = std::nullopt);

/// Header `iteration,loss_total,loss_u,loss_f`.
void write_loss_trace_csv(const std::filesystem::path& path, std::span<const LossTraceRow> trace);

struct EnsembleModel {
  NetworkSpec spec;
  std::vector<ParameterVector> members;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<LossTraceRow>> traces;
};

/// Member k trains from Rng(derive_seed(base, k)) where base is one draw from `rng`.
/// Members run on up to `threads` worker threads (0 = hardware concurrency).
/// A failing member is reported as EnsembleError.
EnsembleModel train_deep_ensemble(const NetworkSpec& spec, const SensorDataset& data, const PdeProblem& problem,
                                  const TrainConfig& config, std::size_t n_members, Rng& rng,
                                  std::size_t threads = 0);

struct McdModel {
  NetworkSpec spec;
  ParameterVector params;
  double dropout_rate = 0.0;
  std::vector<LossTraceRow> trace;
  std::vector<LambdaPair> lambda_trace;
};

/// train_adam with dropout active at `spec.dropout_rate`.
McdModel train_mcd(const NetworkSpec& spec, const SensorDataset& data, const PdeProblem& problem,
                   const TrainConfig& config, Rng& rng);

/// Pass p uses a mask seeded by derive_seed(base, p), base drawn once from `rng`.
/// `coords` is input_dim x points; each result is output_dim x points.
std::vector<Matrix> mcd_predict_samples(const McdModel& model, const Eigen::Ref<const Matrix>& coords,
                                        std::size_t n_passes, Rng& rng);

}  // namespace pinnuq
