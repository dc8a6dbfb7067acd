#include "pinnuq/cli/experiment.hpp"

#include "pinnuq/cli/heatmap.hpp"
#include "pinnuq/cli/manifest.hpp"
#include "pinnuq/error.hpp"

#include <chrono>
#include <fstream>

namespace pinnuq::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr const char* kParamsFile = "params.bin";
constexpr const char* kModelFile = "model.json";

// Independent streams of the experiment seed.
enum SeedStream : std::uint64_t { kDataStream = 0, kFitStream = 1, kPredictStream = 2 };

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

ojson read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + " is not valid JSON: " + e.what());
  }
}

template <class F>
auto in_stage(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, exit_code_for(e), e.what());
  }
}

std::size_t compared_outputs(ProblemPreset p) { return p == ProblemPreset::BurgersForward ? 1 : 2; }

std::string trace_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "loss_%03zu.csv", k);
  return buf;
}

void write_traces(const fs::path& dir, const std::vector<std::vector<LossTraceRow>>& traces) {
  if (traces.empty()) return;
  fs::create_directories(dir / "traces");
  for (std::size_t k = 0; k < traces.size(); ++k) write_loss_trace_csv(dir / "traces" / trace_name(k), traces[k]);
}

ojson lambda_json(const std::vector<LambdaPair>& values) {
  ojson a = ojson::array();
  for (const auto& l : values) a.push_back({l[0], l[1]});
  return a;
}

double final_loss(const std::vector<LossTraceRow>& trace) { return trace.empty() ? 0.0 : trace.back().total; }

ojson region_std(const PredictiveSummary& s) {
  double shock = 0.0, smooth = 0.0;
  std::size_t ns = 0, nm = 0;
  for (Eigen::Index i = 0; i < s.grid.coords.rows(); ++i) {
    const double x = s.grid.coords(i, 0), t = s.grid.coords(i, 1);
    if (std::abs(x) < 0.1 && t > 0.8) {
      shock += s.std(i, 0);
      ++ns;
    }
    if (t < 0.2) {
      smooth += s.std(i, 0);
      ++nm;
    }
  }
  return {{"shock_mean_std", ns ? shock / static_cast<double>(ns) : 0.0},
          {"smooth_mean_std", nm ? smooth / static_cast<double>(nm) : 0.0}};
}

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
  if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SchemaError*>(&e)) return kExitConfig;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e)) return kExitData;
  if (dynamic_cast<const DivergenceError*>(&e) || dynamic_cast<const SamplerError*>(&e) ||
      dynamic_cast<const EnsembleError*>(&e)) {
    return kExitNumerical;
  }
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitData;
  return kExitOther;
}

EvalGrid evaluation_grid(const ExperimentConfig& config) {
  if (config.problem == ProblemPreset::BurgersForward) return burgers_eval_grid(config.eval.nx, config.eval.nt);
  const double t = config.eval.time < 0.0 ? 0.5 * config.data.horizon : config.eval.time;
  return ns_eval_grid(t, config.eval.nx, config.eval.ny);
}

ExactField reference_field(const ExperimentConfig& config) {
  if (config.problem == ProblemPreset::BurgersForward) return burgers_field();
  return taylor_green_field(config.problem_definition().lambda2);
}

std::string dump_metrics(const nlohmann::ordered_json& metrics) { return metrics.dump(2) + "\n"; }

SensorDataset stage_generate_data(const ExperimentConfig& config, const fs::path& dir) {
  const PdeProblem problem = config.problem_definition();
  SensorDataset data;
  if (!config.data.state_csv.empty()) {
    for (const auto& p : {config.data.state_csv, config.data.residual_csv}) {
      if (!fs::exists(p)) throw IoError("dataset file " + p + " does not exist");
    }
    data = load_dataset_csv(config.data.state_csv, config.data.residual_csv);
    if (data.kind != problem.kind) throw SchemaError("dataset CSVs do not match problem " + std::string(to_string(config.problem)));
    try {
      data.validate(problem);
    } catch (const ContractError& e) {
      throw SchemaError(e.what());
    }
    data.sigma_u = config.data.sigma_u;
    data.sigma_f = config.data.sigma_f;
  } else {
    Rng rng(config.data.seed.value_or(derive_seed(config.seed, kDataStream)));
    data = generate_sensor_dataset(problem, reference_field(config), config.data.n_state, config.data.n_residual,
                                   config.data.sigma_u, config.data.sigma_f, rng);
  }
  write_state_csv(dir / "state.csv", data);
  write_residual_csv(dir / "residual.csv", data);
  return data;
}

SensorDataset load_run_data(const ExperimentConfig& config, const fs::path& dir) {
  for (const char* name : {"state.csv", "residual.csv"}) {
    if (!fs::exists(dir / name)) throw IoError("dataset file " + (dir / name).string() + " does not exist; run generate-data first");
  }
  SensorDataset data = load_dataset_csv(dir / "state.csv", dir / "residual.csv");
  if (data.kind != config.problem_definition().kind) throw SchemaError("run data does not match the configured problem");
  data.sigma_u = config.data.sigma_u;
  data.sigma_f = config.data.sigma_f;
  return data;
}

FitResult stage_fit(const ExperimentConfig& config, const SensorDataset& data, const fs::path& dir) {
  const PdeProblem problem = config.problem_definition();
  const std::size_t extra = problem.infer_lambda ? kLambdaSlots : 0;
  Rng rng(derive_seed(config.seed, kFitStream));
  FitResult fit;
  fit.spec = config.network_spec();
  fit.method = config.method;
  fit.dropout_rate = fit.spec.dropout_rate;

  switch (config.method) {
    case UqMethod::DeepEnsemble: {
      EnsembleModel model =
          train_deep_ensemble(fit.spec, data, problem, config.train, config.ensemble.members, rng, config.ensemble.threads);
      fit.params = std::move(model.members);
      fit.loss_traces = std::move(model.traces);
      if (extra) {
        for (const auto& p : fit.params) fit.lambda_values.push_back(lambda_of(fit.spec, p));
      }
      ojson losses = ojson::array();
      for (const auto& t : fit.loss_traces) losses.push_back(final_loss(t));
      fit.diagnostics["member_final_loss"] = losses;
      fit.diagnostics["member_seeds"] = model.seeds;
      break;
    }
    case UqMethod::McDropout: {
      McdModel model = train_mcd(fit.spec, data, problem, config.train, rng);
      fit.params = {model.params};
      fit.loss_traces = {model.trace};
      if (extra) {
        // Dropout never touches lambda; its spread comes from the last training iterates.
        const std::size_t n = std::min(config.mcd.passes, model.lambda_trace.size());
        fit.lambda_values.assign(model.lambda_trace.end() - static_cast<std::ptrdiff_t>(n), model.lambda_trace.end());
      }
      fit.diagnostics["final_loss"] = final_loss(model.trace);
      break;
    }
    case UqMethod::Hmc: {
      ParameterVector init;
      if (config.hmc.warm_start_iterations > 0) {
        TrainConfig warm = config.train;
        warm.iterations = config.hmc.warm_start_iterations;
        TrainResult r = train_adam(fit.spec, data, problem, warm, rng);
        init = std::move(r.params);
        fit.loss_traces = {std::move(r.trace)};
        fit.diagnostics["warm_start_final_loss"] = final_loss(fit.loss_traces.front());
      } else {
        init = init_params(fit.spec, rng);
        if (extra) init = extend_parameters(init, config.train.lambda_init);
      }
      PosteriorSamples s = hmc_sample(fit.spec, data, problem, config.hmc.sampler, init, rng);
      write_posterior_samples(dir / kParamsFile, dir / "samples.json", s);
      fit.params = std::move(s.samples);
      fit.lambda_values = std::move(s.lambda_samples);
      fit.diagnostics["acceptance_rate"] = s.acceptance_rate;
      fit.diagnostics["burn_in_acceptance_rate"] = s.burn_in_acceptance_rate;
      fit.diagnostics["final_step_size"] = s.final_step_size;
      fit.diagnostics["divergent"] = s.divergent;
      bool finite = true;
      for (double lp : s.log_posterior) finite = finite && std::isfinite(lp);
      for (const auto& p : fit.params) finite = finite && p.allFinite();
      fit.diagnostics["all_samples_finite"] = finite;
      break;
    }
  }

  if (config.method != UqMethod::Hmc) {
    write_parameter_file(dir / kParamsFile, header_for(fit.spec, extra), fit.params);
  }
  write_traces(dir, fit.loss_traces);
  ojson model;
  model["problem"] = std::string(to_string(config.problem));
  model["method"] = std::string(to_string(config.method));
  model["hidden_layers"] = fit.spec.hidden_layers;
  model["hidden_width"] = fit.spec.hidden_width;
  model["dropout_rate"] = fit.dropout_rate;
  model["extra_slots"] = extra;
  model["realizations"] = fit.params.size();
  model["lambda_values"] = lambda_json(fit.lambda_values);
  model["diagnostics"] = fit.diagnostics;
  write_text(dir / kModelFile, model.dump(2) + "\n");
  return fit;
}

FitResult load_fit(const ExperimentConfig& config, const fs::path& dir) {
  const ojson model = read_json(dir / kModelFile);
  FitResult fit;
  fit.spec = config.network_spec();
  fit.method = config.method;
  if (model.at("method").get<std::string>() != to_string(config.method) ||
      model.at("problem").get<std::string>() != to_string(config.problem)) {
    throw ConfigError("fitted model in " + dir.string() + " was produced for a different problem or method");
  }
  fit.dropout_rate = model.at("dropout_rate").get<double>();
  fit.spec.dropout_rate = fit.dropout_rate;
  ParameterFile file = read_parameter_file(dir / kParamsFile);
  if (!(file.header == header_for(fit.spec, model.at("extra_slots").get<std::size_t>()))) {
    throw ConfigError("parameter file does not match the configured network");
  }
  fit.params = std::move(file.records);
  for (const auto& l : model.at("lambda_values")) fit.lambda_values.push_back({l.at(0).get<double>(), l.at(1).get<double>()});
  fit.diagnostics = model.at("diagnostics");
  return fit;
}

nlohmann::ordered_json stage_evaluate(const ExperimentConfig& config, const FitResult& fit, const fs::path& dir) {
  const EvalGrid grid = evaluation_grid(config);
  std::vector<Matrix> realizations;
  if (fit.method == UqMethod::McDropout) {
    Rng rng(derive_seed(config.seed, kPredictStream));
    const McdModel model{fit.spec, fit.params.front(), fit.dropout_rate, {}, {}};
    realizations = mcd_predict_samples(model, grid.columns(), config.mcd.passes, rng);
  } else {
    realizations = parameter_realizations(fit.spec, fit.params, grid);
  }
  const PredictiveSummary summary = predictive_summary(realizations, grid, fit.method);
  write_summary_csv(dir / "summary.csv", summary);

  const Matrix exact = exact_on_grid(reference_field(config), grid);
  const auto names = output_names(grid.kind);
  write_field_csv(dir / "exact.csv", grid, names, exact);
  const std::size_t k = compared_outputs(config.problem);
  const ErrorFields errors = error_fields(summary, exact, k);
  std::vector<std::string> error_names;
  for (std::size_t c = 0; c < k; ++c) error_names.push_back("abs_error_" + names[c]);
  write_field_csv(dir / "error.csv", grid, error_names, errors.abs_error);

  ojson m;
  m["problem"] = std::string(to_string(config.problem));
  m["method"] = std::string(to_string(config.method));
  m["scale"] = std::string(to_string(config.scale));
  m["seed"] = config.seed;
  m["realizations"] = summary.sample_count;
  m["grid_points"] = grid.size();
  m["relative_l2"] = errors.relative_l2;
  m["mean_abs_error"] = errors.mean_abs_error;
  m["coverage_2sigma"] = coverage_fraction(summary, exact, 2.0, k);
  m["mean_std"] = summary.std.leftCols(static_cast<Eigen::Index>(k)).mean();
  ojson per_output;
  for (std::size_t c = 0; c < k; ++c) {
    PredictiveSummary one = summary;
    one.mean = summary.mean.col(static_cast<Eigen::Index>(c));
    one.std = summary.std.col(static_cast<Eigen::Index>(c));
    const Matrix ex = exact.col(static_cast<Eigen::Index>(c));
    per_output[names[c]] = {{"relative_l2", error_fields(one, ex).relative_l2},
                            {"coverage_2sigma", coverage_fraction(one, ex, 2.0)},
                            {"mean_std", one.std.mean()}};
  }
  m["per_output"] = per_output;
  if (config.problem == ProblemPreset::BurgersForward) {
    m["regions"] = region_std(summary);
  } else {
    // Pressure is determined up to a constant; compare after removing the means.
    const Vector p_hat = summary.mean.col(2).array() - summary.mean.col(2).mean();
    const Vector p_ref = exact.col(2).array() - exact.col(2).mean();
    m["pressure_relative_l2_centered"] = (p_hat - p_ref).norm() / p_ref.norm();
  }
  if (!fit.lambda_values.empty()) {
    const LambdaEstimate est = estimate_lambda(fit.method, fit.lambda_values);
    write_lambda_csv(dir / "lambda.csv", std::vector<LambdaEstimate>{est});
    m["lambda"] = {{"lambda1_mean", est.mean[0]},
                   {"lambda1_std", est.std[0]},
                   {"lambda2_mean", est.mean[1]},
                   {"lambda2_std", est.std[1]},
                   {"count", est.raw.size()},
                   {"degenerate", est.degenerate}};
  }
  m["diagnostics"] = fit.diagnostics;
  write_text(dir / "metrics.json", dump_metrics(m));
  return m;
}

std::vector<fs::path> stage_render(const ExperimentConfig& config, const fs::path& dir) {
  std::vector<fs::path> out;
  if (!config.render.enabled) return out;
  fs::create_directories(dir / "figures");
  const auto names = output_names(config.problem_definition().kind);
  std::vector<std::pair<std::string, std::string>> jobs;  // (csv, column)
  for (const auto& n : names) {
    jobs.emplace_back("summary.csv", "mean_" + n);
    jobs.emplace_back("summary.csv", "std_" + n);
    jobs.emplace_back("exact.csv", n);
  }
  for (std::size_t c = 0; c < compared_outputs(config.problem); ++c) jobs.emplace_back("error.csv", "abs_error_" + names[c]);
  for (const auto& [csv, column] : jobs) {
    const std::string stem = csv == "exact.csv" ? "exact_" + column : column;
    const fs::path svg = dir / "figures" / (stem + ".svg");
    render_heatmap(dir / csv, column, svg, config.render.colormap);
    out.push_back(svg);
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  using clock = std::chrono::steady_clock;
  config.validate();
  ExperimentReport report;
  report.output_dir = resolve_output_dir(config);
  in_stage("setup", [&] {
    fs::create_directories(report.output_dir);
    write_text(report.output_dir / "config.json", to_json(config).dump(2) + "\n");
  });
  ojson timings;
  auto timed = [&](const char* stage, auto&& body) {
    const auto start = clock::now();
    auto result = in_stage(stage, body);
    timings[stage] = std::chrono::duration<double>(clock::now() - start).count();
    return result;
  };
  const SensorDataset data = timed(kStageData, [&] { return stage_generate_data(config, report.output_dir); });
  const FitResult fit = timed(kStageFit, [&] { return stage_fit(config, data, report.output_dir); });
  report.metrics = timed(kStageEvaluate, [&] { return stage_evaluate(config, fit, report.output_dir); });
  timed(kStageRender, [&] { return stage_render(config, report.output_dir); });
  in_stage("manifest", [&] {
    write_text(report.output_dir / "timings.json", timings.dump(2) + "\n");
    write_manifest(report.output_dir);
  });
  for (const auto& e : collect_manifest(report.output_dir)) report.files.push_back(report.output_dir / e.path);
  return report;
}

}  // namespace pinnuq::cli
