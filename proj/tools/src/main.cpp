#include "pinnuq/cli/config.hpp"
#include "pinnuq/cli/experiment.hpp"
#include "pinnuq/cli/heatmap.hpp"
#include "pinnuq/cli/manifest.hpp"
#include "pinnuq/cli/process.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

namespace fs = std::filesystem;
using namespace pinnuq;
using namespace pinnuq::cli;

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::string method;
  std::string scale;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON experiment config");
  cmd->add_option("-p,--preset", o.preset, "burgers-forward, ns-forward or ns-inverse");
  cmd->add_option("-m,--method", o.method, "hmc, de or mcd");
  cmd->add_option("--scale", o.scale, "full or desk");
  cmd->add_option("--seed", o.seed, "experiment seed");
  cmd->add_option("-o,--out", o.output_dir, "run directory (default: $PINNUQ_OUTPUT_ROOT/<name>)");
  cmd->add_option("--set", o.overrides, "override a config key, e.g. --set data.n_state=500")->take_all();
}

// Flags override the config file, --set overrides everything.
ExperimentConfig resolve(const CommonOptions& o) {
  nlohmann::json doc = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw IoError("cannot open config " + o.config_path);
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config " + o.config_path + " is not valid JSON: " + e.what());
    }
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!o.preset.empty()) doc["problem"] = o.preset;
  if (!o.method.empty()) doc["method"] = o.method;
  if (!o.scale.empty()) doc["scale"] = o.scale;
  if (o.seed) doc["seed"] = *o.seed;
  if (!o.output_dir.empty()) doc["output_dir"] = o.output_dir;
  for (const auto& s : o.overrides) apply_override(doc, s);
  return config_from_json(doc);
}

fs::path prepare_dir(const ExperimentConfig& config) {
  const fs::path dir = resolve_output_dir(config);
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << to_json(config).dump(2) << '\n';
  return dir;
}

template <class F>
void stage(const char* name, F&& body) {
  try {
    body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, exit_code_for(e), e.what());
  }
}

void print_metrics(const nlohmann::ordered_json& m, const fs::path& dir) {
  std::cout << "relative_l2 " << m.at("relative_l2").get<double>() << "  coverage_2sigma "
            << m.at("coverage_2sigma").get<double>() << "  mean_std " << m.at("mean_std").get<double>() << '\n';
  if (m.contains("lambda")) {
    const auto& l = m.at("lambda");
    std::cout << "lambda1 " << l.at("lambda1_mean").get<double>() << " +- " << l.at("lambda1_std").get<double>()
              << "  lambda2 " << l.at("lambda2_mean").get<double>() << " +- " << l.at("lambda2_std").get<double>()
              << '\n';
  }
  std::cout << "metrics " << (dir / "metrics.json").string() << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Physics-informed neural PDE surrogates with HMC, deep-ensemble and MC-dropout uncertainty"};
  app.require_subcommand(1);
  CommonOptions o;

  auto* gen = app.add_subcommand("generate-data", "write noisy sensor and residual CSVs");
  auto* train = app.add_subcommand("train", "train a deep ensemble or MC-dropout model (method de or mcd)");
  auto* sample = app.add_subcommand("sample", "draw HMC posterior samples (method hmc)");
  auto* evaluate = app.add_subcommand("evaluate", "predictive summary, error fields and metrics for a fitted run");
  auto* render = app.add_subcommand("render", "SVG heatmaps of a run, or of one column of a field CSV");
  auto* full = app.add_subcommand("run", "generate data, fit, evaluate and render in one go");
  for (auto* cmd : {gen, train, sample, evaluate, render, full}) add_common(cmd, o);

  std::string field_csv, column, output_svg, colormap = "viridis";
  render->add_option("--field", field_csv, "field CSV to render instead of a run directory");
  render->add_option("--column", column, "value column of --field");
  render->add_option("--output", output_svg, "SVG path for --field");
  render->add_option("--colormap", colormap, "viridis, gray or coolwarm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (render->parsed() && !field_csv.empty()) {
    if (column.empty() || output_svg.empty()) throw UsageError("--field needs --column and --output");
    stage(kStageRender, [&] { render_heatmap(field_csv, column, output_svg, colormap); });
    std::cout << output_svg << '\n';
    return kExitOk;
  }

  const ExperimentConfig config = resolve(o);
  if (full->parsed()) {
    const ExperimentReport report = run_experiment(config);
    print_metrics(report.metrics, report.output_dir);
    return kExitOk;
  }

  const fs::path dir = prepare_dir(config);
  if (gen->parsed()) {
    stage(kStageData, [&] { stage_generate_data(config, dir); });
  } else if (train->parsed() || sample->parsed()) {
    const bool wants_hmc = sample->parsed();
    if ((config.method == UqMethod::Hmc) != wants_hmc) {
      throw UsageError(wants_hmc ? "sample needs --method hmc" : "train needs --method de or mcd");
    }
    stage(kStageFit, [&] { stage_fit(config, load_run_data(config, dir), dir); });
  } else if (evaluate->parsed()) {
    nlohmann::ordered_json metrics;
    stage(kStageEvaluate, [&] { metrics = stage_evaluate(config, load_fit(config, dir), dir); });
    print_metrics(metrics, dir);
  } else if (render->parsed()) {
    if (!colormap.empty() && colormap != "viridis") {
      ExperimentConfig c = config;
      c.render.colormap = colormap;
      stage(kStageRender, [&] { stage_render(c, dir); });
    } else {
      stage(kStageRender, [&] { stage_render(config, dir); });
    }
  }
  write_manifest(dir);
  std::cout << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "pinnuq: " << e.what() << '\n';
    return exit_code_for(e);
  }
}
