#include "pinnuq/training.hpp"

#include "pinnuq/error.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

namespace pinnuq {

namespace {

Eigen::Index as_index(std::size_t n) { return static_cast<Eigen::Index>(n); }

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::size_t expected_length(const NetworkSpec& spec, const PdeProblem& problem) {
  return spec.parameter_count() + (problem.infer_lambda ? kLambdaSlots : 0);
}

void check_shapes(const NetworkSpec& spec, const SensorDataset& data, const PdeProblem& problem) {
  if (spec.input_dim != problem.input_dim() || spec.output_dim != problem.output_dim()) {
    throw ContractError("network does not match problem dimensions");
  }
  if (data.kind != problem.kind) throw ContractError("dataset kind does not match problem");
  const auto in = as_index(problem.input_dim());
  if ((data.n_state() > 0 && data.state_coords.cols() != in) ||
      (data.n_residual() > 0 && data.residual_coords.cols() != in)) {
    throw ContractError("dataset coordinates do not match problem inputs");
  }
  if (data.state_values.rows() != data.state_coords.rows() ||
      (data.n_state() > 0 && data.state_values.cols() != as_index(problem.state_dim()))) {
    throw ContractError("state values shape mismatch");
  }
  if (data.residual_targets.rows() != data.residual_coords.rows() ||
      (data.n_residual() > 0 && data.residual_targets.cols() != as_index(problem.residual_dim()))) {
    throw ContractError("residual targets shape mismatch");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations == 0) throw ConfigError("iterations must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (!(weights.state > 0.0) || !(weights.residual > 0.0)) throw ConfigError("loss weights must be positive");
}

ModelTerms record_model_terms(Tape& tape, NodeId params, const NetworkSpec& spec, const SensorDataset& data,
                              const PdeProblem& problem, const DropoutMask* mask) {
  check_shapes(spec, data, problem);
  if (static_cast<std::size_t>(tape.value(params).size()) != expected_length(spec, problem)) {
    throw ContractError("parameter node length does not match network and problem");
  }
  const std::size_t in = problem.input_dim();

  TapedValue state_sse{tape, tape.constant(0.0)};
  if (data.n_state() > 0) {
    const Matrix coords = data.state_coords.transpose();
    const TapedJet jet = record_jet(tape, params, spec, coords, JetLayout::value_only(in), mask);
    for (std::size_t k = 0; k < problem.state_dim(); ++k) {
      const NodeId diff = ops::add_constant(tape, jet.value(k).id(), -data.state_values.col(as_index(k)).transpose());
      const TapedValue sq{tape, ops::sum_squares(tape, diff)};
      state_sse = k == 0 ? sq : state_sse + sq;
    }
  }

  TapedValue residual_sse{tape, tape.constant(0.0)};
  if (data.n_residual() > 0) {
    const Matrix coords = data.residual_coords.transpose();
    const JetLayout layout{in, true, problem.second_order_inputs()};
    const TapedJet jet = record_jet(tape, params, spec, coords, layout, mask);
    std::optional<TapedLambda> lambda;
    if (problem.infer_lambda) {
      const auto n = as_index(spec.parameter_count());
      const TapedValue l1{tape, ops::element(tape, params, n)};
      const TapedValue l2{tape, ops::softplus(tape, ops::element(tape, params, n + 1))};
      lambda = TapedLambda{l1, l2};
    }
    const std::vector<TapedValue> rows = record_residuals(jet, problem, lambda);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const NodeId diff =
          ops::add_constant(tape, rows[k].id(), -data.residual_targets.col(as_index(k)).transpose());
      const TapedValue sq{tape, ops::sum_squares(tape, diff)};
      residual_sse = k == 0 ? sq : residual_sse + sq;
    }
  }
  return {state_sse, residual_sse, data.n_state() * problem.state_dim(),
          data.n_residual() * problem.residual_dim()};
}

TapedLoss pinn_loss(Tape& tape, NodeId params, const NetworkSpec& spec, const SensorDataset& data,
                    const PdeProblem& problem, const LossWeights& weights, const DropoutMask* mask) {
  if (data.n_state() == 0 && data.n_residual() == 0) throw ContractError("dataset is empty");
  const ModelTerms terms = record_model_terms(tape, params, spec, data, problem, mask);
  const auto mean = [&](const TapedValue& sse, std::size_t count) {
    return count == 0 ? sse : TapedValue{tape, ops::scale(tape, sse.id(), 1.0 / static_cast<double>(count))};
  };
  const TapedValue state = mean(terms.state_sse, terms.state_count);
  const TapedValue residual = mean(terms.residual_sse, terms.residual_count);
  const TapedValue total = weights.state * state + weights.residual * residual;
  return {total.id(), state.id(), residual.id()};
}

LossGradient loss_and_gradient(const NetworkSpec& spec, const ParameterVector& params, const SensorDataset& data,
                               const PdeProblem& problem, const LossWeights& weights, const DropoutMask* mask) {
  Tape tape;
  const NodeId p = tape.leaf(as_span(params));
  const TapedLoss loss = pinn_loss(tape, p, spec, data, problem, weights, mask);
  LossGradient out;
  out.loss = {tape.scalar(loss.total), tape.scalar(loss.state_mse), tape.scalar(loss.residual_mse)};
  out.gradient = tape.backward(loss.total);
  return out;
}

AdamOptimizer::AdamOptimizer(std::size_t dimension, const TrainConfig& config)
    : lr_(config.learning_rate),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.epsilon),
      m_(Vector::Zero(as_index(dimension))),
      v_(Vector::Zero(as_index(dimension))) {}

void AdamOptimizer::step(ParameterVector& params, const Vector& gradient) {
  if (params.size() != m_.size() || gradient.size() != m_.size()) throw ContractError("Adam dimension mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * gradient;
  v_ = beta2_ * v_ + (1.0 - beta2_) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

TrainResult train_adam(const NetworkSpec& spec, const SensorDataset& data, const PdeProblem& problem,
                       const TrainConfig& config, Rng& rng, const std::optional<ParameterVector>& init) {
  config.validate();
  spec.validate();
  check_shapes(spec, data, problem);
  data.validate(problem);

  TrainResult result;
  if (init) {
    result.params = *init;
  } else {
    result.params = init_params(spec, rng);
    if (problem.infer_lambda) result.params = extend_parameters(result.params, config.lambda_init);
  }
  if (static_cast<std::size_t>(result.params.size()) != expected_length(spec, problem)) {
    throw ContractError("initial parameters do not match network and problem");
  }
  if (!result.params.allFinite()) throw ContractError("initial parameters must be finite");

  AdamOptimizer adam(static_cast<std::size_t>(result.params.size()), config);
  result.trace.reserve(config.iterations);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    std::optional<DropoutMask> mask;
    if (spec.dropout_rate > 0.0) mask = make_dropout_mask(spec, spec.dropout_rate, rng());
    const LossGradient lg = loss_and_gradient(spec, result.params, data, problem, config.weights,
                                              mask ? &*mask : nullptr);
    if (!std::isfinite(lg.loss.total) || !lg.gradient.allFinite()) {
      throw DivergenceError(it, lg.loss.total, "non-finite training loss");
    }
    result.trace.push_back({it, lg.loss.total, lg.loss.state, lg.loss.residual});
    adam.step(result.params, lg.gradient);
    if (problem.infer_lambda) result.lambda_trace.push_back(lambda_of(spec, result.params));
  }
  return result;
}

void write_loss_trace_csv(const std::filesystem::path& path, std::span<const LossTraceRow> trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "iteration,loss_total,loss_u,loss_f\n";
  for (const auto& row : trace) {
    out << row.iteration << ',' << format_double(row.total) << ',' << format_double(row.state) << ','
        << format_double(row.residual) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

EnsembleModel train_deep_ensemble(const NetworkSpec& spec, const SensorDataset& data, const PdeProblem& problem,
                                  const TrainConfig& config, std::size_t n_members, Rng& rng, std::size_t threads) {
  if (n_members == 0) throw ContractError("ensemble needs at least one member");
  config.validate();
  EnsembleModel model;
  model.spec = spec;
  const std::uint64_t base = rng();
  for (std::size_t k = 0; k < n_members; ++k) model.seeds.push_back(derive_seed(base, k));
  model.members.resize(n_members);
  model.traces.resize(n_members);
  std::vector<std::exception_ptr> errors(n_members);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < n_members; k = next++) {
      try {
        Rng member_rng(model.seeds[k]);
        TrainResult r = train_adam(spec, data, problem, config, member_rng);
        model.members[k] = std::move(r.params);
        model.traces[k] = std::move(r.trace);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n_members);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  for (std::size_t k = 0; k < n_members; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const std::exception& e) {
      throw EnsembleError(k, e.what());
    }
  }
  return model;
}

McdModel train_mcd(const NetworkSpec& spec, const SensorDataset& data, const PdeProblem& problem,
                   const TrainConfig& config, Rng& rng) {
  if (!(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0)) throw ContractError("dropout rate must lie in [0, 1)");
  TrainResult r = train_adam(spec, data, problem, config, rng);
  return {spec, std::move(r.params), spec.dropout_rate, std::move(r.trace), std::move(r.lambda_trace)};
}

std::vector<Matrix> mcd_predict_samples(const McdModel& model, const Eigen::Ref<const Matrix>& coords,
                                        std::size_t n_passes, Rng& rng) {
  if (n_passes == 0) throw ContractError("at least one prediction pass is required");
  const std::uint64_t base = rng();
  std::vector<Matrix> passes;
  passes.reserve(n_passes);
  for (std::size_t p = 0; p < n_passes; ++p) {
    if (model.dropout_rate > 0.0) {
      const DropoutMask mask = make_dropout_mask(model.spec, model.dropout_rate, derive_seed(base, p));
      passes.push_back(forward_batch(model.spec, as_span(model.params), coords, &mask));
    } else {
      passes.push_back(forward_batch(model.spec, as_span(model.params), coords));
    }
  }
  return passes;
}

}  // namespace pinnuq
