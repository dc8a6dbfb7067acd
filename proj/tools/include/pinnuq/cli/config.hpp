#pragma once

#include "pinnuq/error.hpp"
#include "pinnuq/hmc.hpp"
#include "pinnuq/method.hpp"
#include "pinnuq/pde.hpp"
#include "pinnuq/training.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace pinnuq::cli {

/// Invalid preset, method or flag; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class ProblemPreset { BurgersForward, NsForward, NsInverse };
enum class Scale { Full, Desk };

std::string_view to_string(ProblemPreset p) noexcept;
std::string_view to_string(Scale s) noexcept;
/// Throw UsageError on unknown names.
ProblemPreset parse_preset(std::string_view text);
Scale parse_scale(std::string_view text);
UqMethod parse_method_name(std::string_view text);

struct NetworkConfig {
  std::size_t hidden_layers = 8;
  std::size_t hidden_width = 20;
  double dropout_rate = 0.0;  // used by mcd only
};

struct DataConfig {
  std::size_t n_state = 2000;
  std::size_t n_residual = 2000;
  double sigma_u = 0.1;
  double sigma_f = 0.1;
  /// Overrides the seed derived from the experiment seed.
  std::optional<std::uint64_t> seed;
  /// Taylor-Green time horizon.
  double horizon = kTaylorGreenHorizon;
  /// External CSV data instead of synthetic sensors; both or neither.
  std::string state_csv;
  std::string residual_csv;
};

struct EnsembleConfig {
  std::size_t members = 100;
  std::size_t threads = 0;
};

struct McdConfig {
  std::size_t passes = 100;
};

struct HmcRunConfig {
  HmcConfig sampler;
  /// Adam iterations before the chain starts from the fitted parameters.
  std::size_t warm_start_iterations = 2000;
};

struct EvalConfig {
  std::size_t nx = 256;
  std::size_t nt = 100;
  std::size_t ny = 50;
  /// Snapshot time for Navier-Stokes grids; negative means half the horizon.
  double time = -1.0;
};

struct RenderConfig {
  bool enabled = true;
  std::string colormap = "viridis";
};

struct ExperimentConfig {
  ProblemPreset problem = ProblemPreset::BurgersForward;
  UqMethod method = UqMethod::DeepEnsemble;
  Scale scale = Scale::Full;
  std::uint64_t seed = 1;
  std::string output_dir;
  NetworkConfig network;
  DataConfig data;
  TrainConfig train;
  EnsembleConfig ensemble;
  McdConfig mcd;
  HmcRunConfig hmc;
  EvalConfig eval;
  RenderConfig render;

  PdeProblem problem_definition() const;
  NetworkSpec network_spec() const;
  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Preset defaults for a problem, method and scale.
ExperimentConfig preset_config(ProblemPreset problem, UqMethod method, Scale scale);

nlohmann::ordered_json to_json(const ExperimentConfig& config);
/// Reads problem/method/scale first, fills the remaining keys from that
/// preset, then applies the document. Unknown keys raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& document);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies `key.path=value` overrides to a config document. The value is
/// parsed as JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& document, std::string_view assignment);

/// Directory named by the PINNUQ_OUTPUT_ROOT environment variable, else ./runs.
std::filesystem::path default_output_root();
/// output_dir if set, else <root>/<problem>-<method>-<scale>-s<seed>.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

}  // namespace pinnuq::cli
