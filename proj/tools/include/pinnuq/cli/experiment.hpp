#pragma once

#include "pinnuq/cli/config.hpp"
#include "pinnuq/stats.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pinnuq::cli {

/// A module failure tagged with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, int exit_code, const std::string& what)
      : Error("stage " + stage + ": " + what), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

/// Stable process exit codes per error class.
enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitUsage = 2,
  kExitConfig = 3,
  kExitData = 4,
  kExitNumerical = 5,
};

/// Exit code for an exception thrown by any module.
int exit_code_for(const std::exception& e) noexcept;

/// Parameter realizations produced by one UQ method.
struct FitResult {
  NetworkSpec spec;
  UqMethod method = UqMethod::DeepEnsemble;
  /// DE members or HMC samples (possibly lambda-extended); one vector for MCD.
  std::vector<ParameterVector> params;
  double dropout_rate = 0.0;
  std::vector<std::vector<LossTraceRow>> loss_traces;
  std::vector<LambdaPair> lambda_values;  // inverse problems only
  nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
};

struct ExperimentReport {
  std::filesystem::path output_dir;
  nlohmann::ordered_json metrics;
  std::vector<std::filesystem::path> files;
};

/// Stage names used in error tags and the manifest.
inline constexpr const char* kStageData = "generate-data";
inline constexpr const char* kStageFit = "fit";
inline constexpr const char* kStageEvaluate = "evaluate";
inline constexpr const char* kStageRender = "render";

/// Synthetic sensors (or the configured CSV files); writes state.csv and residual.csv.
SensorDataset stage_generate_data(const ExperimentConfig& config, const std::filesystem::path& dir);
/// Reads state.csv and residual.csv from a run directory.
SensorDataset load_run_data(const ExperimentConfig& config, const std::filesystem::path& dir);

/// Trains (de, mcd) or samples (hmc); writes parameter files, sidecars and traces.
FitResult stage_fit(const ExperimentConfig& config, const SensorDataset& data, const std::filesystem::path& dir);
/// Reads what stage_fit wrote.
FitResult load_fit(const ExperimentConfig& config, const std::filesystem::path& dir);

/// Predictive summary, error fields, coverage, lambda; writes the CSVs and metrics.json.
nlohmann::ordered_json stage_evaluate(const ExperimentConfig& config, const FitResult& fit,
                                      const std::filesystem::path& dir);
/// SVG heatmaps for the summary and error CSVs in `dir`.
std::vector<std::filesystem::path> stage_render(const ExperimentConfig& config, const std::filesystem::path& dir);

/// Full pipeline. Writes config.json and manifest.json alongside the stage outputs.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// The evaluation grid implied by the config.
EvalGrid evaluation_grid(const ExperimentConfig& config);
/// Reference field for the problem preset.
ExactField reference_field(const ExperimentConfig& config);

/// Deterministic text of a metrics document (2-space indent, trailing newline).
std::string dump_metrics(const nlohmann::ordered_json& metrics);

}  // namespace pinnuq::cli
