#include "pinnuq/cli/config.hpp"

#include "pinnuq/cli/heatmap.hpp"
#include "pinnuq/error.hpp"

#include <cstdlib>
#include <fstream>

namespace pinnuq::cli {
namespace {

using ojson = nlohmann::ordered_json;

// Every key of `doc` must exist in `base`; objects must stay objects.
void check_keys(const ojson& doc, const ojson& base, const std::string& prefix) {
  for (const auto& [key, value] : doc.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    const ojson& expected = base.at(key);
    if (expected.is_object()) {
      if (!value.is_object()) throw ConfigError("config key '" + path + "' must be an object");
      check_keys(value, expected, path);
    }
  }
}

void overlay(ojson& base, const ojson& doc) {
  for (const auto& [key, value] : doc.items()) {
    if (base[key].is_object()) {
      overlay(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

template <class T>
T read(const ojson& doc, const char* section, const char* key) {
  const ojson& node = section ? doc.at(section).at(key) : doc.at(key);
  try {
    return node.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + (section ? std::string(section) + "." : "") + key +
                      "' has the wrong type");
  }
}

}  // namespace

std::string_view to_string(ProblemPreset p) noexcept {
  switch (p) {
    case ProblemPreset::BurgersForward:
      return "burgers-forward";
    case ProblemPreset::NsForward:
      return "ns-forward";
    case ProblemPreset::NsInverse:
      return "ns-inverse";
  }
  return "burgers-forward";
}

std::string_view to_string(Scale s) noexcept { return s == Scale::Full ? "full" : "desk"; }

ProblemPreset parse_preset(std::string_view text) {
  if (text == "burgers-forward") return ProblemPreset::BurgersForward;
  if (text == "ns-forward") return ProblemPreset::NsForward;
  if (text == "ns-inverse") return ProblemPreset::NsInverse;
  throw UsageError("unknown problem preset '" + std::string(text) +
                   "' (expected burgers-forward, ns-forward or ns-inverse)");
}

Scale parse_scale(std::string_view text) {
  if (text == "full") return Scale::Full;
  if (text == "desk") return Scale::Desk;
  throw UsageError("unknown scale '" + std::string(text) + "' (expected full or desk)");
}

UqMethod parse_method_name(std::string_view text) {
  try {
    return parse_method(text);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

PdeProblem ExperimentConfig::problem_definition() const {
  switch (problem) {
    case ProblemPreset::BurgersForward:
      return burgers_problem();
    case ProblemPreset::NsForward:
      return navier_stokes_problem(data.horizon);
    case ProblemPreset::NsInverse:
      return navier_stokes_inverse_problem(data.horizon);
  }
  return burgers_problem();
}

NetworkSpec ExperimentConfig::network_spec() const {
  const double rate = method == UqMethod::McDropout ? network.dropout_rate : 0.0;
  return network_for(problem_definition(), network.hidden_layers, network.hidden_width, rate);
}

void ExperimentConfig::validate() const {
  if (network.hidden_layers == 0 || network.hidden_width == 0) throw ConfigError("network needs layers and width");
  if (!(network.dropout_rate >= 0.0 && network.dropout_rate < 1.0)) {
    throw ConfigError("network.dropout_rate must lie in [0, 1)");
  }
  if (data.state_csv.empty() != data.residual_csv.empty()) {
    throw ConfigError("data.state_csv and data.residual_csv must be given together");
  }
  if (data.state_csv.empty() && (data.n_state == 0 || data.n_residual == 0)) {
    throw ConfigError("data.n_state and data.n_residual must be positive");
  }
  if (!(data.sigma_u >= 0.0) || !(data.sigma_f >= 0.0)) throw ConfigError("data sigmas must be non-negative");
  if (!(data.horizon > 0.0)) throw ConfigError("data.horizon must be positive");
  train.validate();
  if (ensemble.members == 0) throw ConfigError("ensemble.members must be positive");
  if (mcd.passes == 0) throw ConfigError("mcd.passes must be positive");
  hmc.sampler.validate();
  if (eval.nx < 2 || eval.nt < 2 || eval.ny < 2) throw ConfigError("evaluation grids need at least 2 points per axis");
  if (eval.time > data.horizon) throw ConfigError("eval.time lies beyond the horizon");
  try {
    colormap_color(render.colormap, 0.0);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig preset_config(ProblemPreset problem, UqMethod method, Scale scale) {
  ExperimentConfig c;
  c.problem = problem;
  c.method = method;
  c.scale = scale;
  const bool ns = problem != ProblemPreset::BurgersForward;
  c.hmc.sampler = ns ? HmcConfig::navier_stokes_preset() : HmcConfig::burgers_preset();
  c.network.dropout_rate = 0.01;

  if (scale == Scale::Full) {
    switch (problem) {
      case ProblemPreset::BurgersForward:
        c.network.hidden_layers = 8;
        c.network.hidden_width = 20;
        c.data.n_state = c.data.n_residual = 2000;
        break;
      case ProblemPreset::NsForward:
        c.network.hidden_layers = 10;
        c.network.hidden_width = 20;
        c.data.n_state = c.data.n_residual = 5000;
        break;
      case ProblemPreset::NsInverse:
        c.network.hidden_layers = 10;
        c.network.hidden_width = 40;
        c.data.n_state = c.data.n_residual = 5000;
        break;
    }
    c.ensemble.members = ns ? 200 : 100;
    c.mcd.passes = ns ? 200 : 100;
    return c;
  }

  c.ensemble.members = 5;
  c.mcd.passes = 100;
  c.hmc.sampler.burn_in_steps = 500;
  c.hmc.sampler.n_samples = 100;
  c.eval.nx = ns ? 100 : 256;
  switch (problem) {
    case ProblemPreset::BurgersForward:
      c.network.hidden_layers = method == UqMethod::Hmc ? 2 : 4;
      c.network.hidden_width = 20;
      c.data.n_state = c.data.n_residual = 500;
      break;
    case ProblemPreset::NsForward:
    case ProblemPreset::NsInverse:
      c.network.hidden_layers = method == UqMethod::Hmc ? 2 : 6;
      c.network.hidden_width = 20;
      c.data.n_state = c.data.n_residual = 1000;
      c.data.sigma_u = c.data.sigma_f = 0.05;
      c.hmc.sampler.sigma_u = c.hmc.sampler.sigma_f = 0.05;
      break;
  }
  if (problem == ProblemPreset::NsInverse) c.train.lambda_init = {1.0, 0.03};
  return c;
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  ojson j;
  j["problem"] = std::string(to_string(c.problem));
  j["method"] = std::string(to_string(c.method));
  j["scale"] = std::string(to_string(c.scale));
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["network"] = {{"hidden_layers", c.network.hidden_layers},
                  {"hidden_width", c.network.hidden_width},
                  {"dropout_rate", c.network.dropout_rate}};
  j["data"] = {{"n_state", c.data.n_state},
               {"n_residual", c.data.n_residual},
               {"sigma_u", c.data.sigma_u},
               {"sigma_f", c.data.sigma_f},
               {"seed", c.data.seed ? ojson(*c.data.seed) : ojson(nullptr)},
               {"horizon", c.data.horizon},
               {"state_csv", c.data.state_csv},
               {"residual_csv", c.data.residual_csv}};
  j["train"] = {{"iterations", c.train.iterations},
                {"learning_rate", c.train.learning_rate},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"epsilon", c.train.epsilon},
                {"w_u", c.train.weights.state},
                {"w_f", c.train.weights.residual},
                {"lambda_init", c.train.lambda_init}};
  j["ensemble"] = {{"members", c.ensemble.members}, {"threads", c.ensemble.threads}};
  j["mcd"] = {{"passes", c.mcd.passes}};
  const HmcConfig& h = c.hmc.sampler;
  j["hmc"] = {{"leapfrog_steps", h.leapfrog_steps},
              {"step_size", h.initial_step_size},
              {"burn_in_steps", h.burn_in_steps},
              {"n_samples", h.n_samples},
              {"target_accept", h.target_accept_range},
              {"prior_sigma", h.prior_sigma},
              {"sigma_u", h.sigma_u},
              {"sigma_f", h.sigma_f},
              {"min_burn_in_acceptance", h.min_burn_in_acceptance},
              {"warm_start_iterations", c.hmc.warm_start_iterations}};
  j["eval"] = {{"nx", c.eval.nx}, {"nt", c.eval.nt}, {"ny", c.eval.ny}, {"time", c.eval.time}};
  j["render"] = {{"enabled", c.render.enabled}, {"colormap", c.render.colormap}};
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& document) {
  if (!document.is_object()) throw ConfigError("config must be a JSON object");
  const ojson doc = ojson::parse(document.dump());
  auto name = [&](const char* key, const char* fallback) {
    if (!doc.contains(key)) return std::string(fallback);
    if (!doc.at(key).is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
    return doc.at(key).get<std::string>();
  };
  ojson merged = to_json(preset_config(parse_preset(name("problem", "burgers-forward")),
                                       parse_method_name(name("method", "de")), parse_scale(name("scale", "full"))));
  check_keys(doc, merged, "");
  overlay(merged, doc);

  ExperimentConfig c = preset_config(parse_preset(name("problem", "burgers-forward")),
                                     parse_method_name(name("method", "de")), parse_scale(name("scale", "full")));
  c.seed = read<std::uint64_t>(merged, nullptr, "seed");
  c.output_dir = read<std::string>(merged, nullptr, "output_dir");
  c.network.hidden_layers = read<std::size_t>(merged, "network", "hidden_layers");
  c.network.hidden_width = read<std::size_t>(merged, "network", "hidden_width");
  c.network.dropout_rate = read<double>(merged, "network", "dropout_rate");
  c.data.n_state = read<std::size_t>(merged, "data", "n_state");
  c.data.n_residual = read<std::size_t>(merged, "data", "n_residual");
  c.data.sigma_u = read<double>(merged, "data", "sigma_u");
  c.data.sigma_f = read<double>(merged, "data", "sigma_f");
  if (merged.at("data").at("seed").is_null()) {
    c.data.seed.reset();
  } else {
    c.data.seed = read<std::uint64_t>(merged, "data", "seed");
  }
  c.data.horizon = read<double>(merged, "data", "horizon");
  c.data.state_csv = read<std::string>(merged, "data", "state_csv");
  c.data.residual_csv = read<std::string>(merged, "data", "residual_csv");
  c.train.iterations = read<std::size_t>(merged, "train", "iterations");
  c.train.learning_rate = read<double>(merged, "train", "learning_rate");
  c.train.beta1 = read<double>(merged, "train", "beta1");
  c.train.beta2 = read<double>(merged, "train", "beta2");
  c.train.epsilon = read<double>(merged, "train", "epsilon");
  c.train.weights.state = read<double>(merged, "train", "w_u");
  c.train.weights.residual = read<double>(merged, "train", "w_f");
  c.train.lambda_init = read<LambdaPair>(merged, "train", "lambda_init");
  c.ensemble.members = read<std::size_t>(merged, "ensemble", "members");
  c.ensemble.threads = read<std::size_t>(merged, "ensemble", "threads");
  c.mcd.passes = read<std::size_t>(merged, "mcd", "passes");
  HmcConfig& h = c.hmc.sampler;
  h.leapfrog_steps = read<std::size_t>(merged, "hmc", "leapfrog_steps");
  h.initial_step_size = read<double>(merged, "hmc", "step_size");
  h.burn_in_steps = read<std::size_t>(merged, "hmc", "burn_in_steps");
  h.n_samples = read<std::size_t>(merged, "hmc", "n_samples");
  h.target_accept_range = read<std::array<double, 2>>(merged, "hmc", "target_accept");
  h.prior_sigma = read<double>(merged, "hmc", "prior_sigma");
  h.sigma_u = read<double>(merged, "hmc", "sigma_u");
  h.sigma_f = read<double>(merged, "hmc", "sigma_f");
  h.min_burn_in_acceptance = read<double>(merged, "hmc", "min_burn_in_acceptance");
  c.hmc.warm_start_iterations = read<std::size_t>(merged, "hmc", "warm_start_iterations");
  c.eval.nx = read<std::size_t>(merged, "eval", "nx");
  c.eval.nt = read<std::size_t>(merged, "eval", "nt");
  c.eval.ny = read<std::size_t>(merged, "eval", "ny");
  c.eval.time = read<double>(merged, "eval", "time");
  c.render.enabled = read<bool>(merged, "render", "enabled");
  c.render.colormap = read<std::string>(merged, "render", "colormap");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

void apply_override(nlohmann::json& document, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw UsageError("override '" + std::string(assignment) + "' is not of the form key.path=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  nlohmann::json* node = &document;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw UsageError("override key '" + key + "' has an empty component");
    if (!node->is_object()) *node = nlohmann::json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

std::filesystem::path default_output_root() {
  if (const char* root = std::getenv("PINNUQ_OUTPUT_ROOT"); root && *root) return root;
  return "runs";
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  return default_output_root() / (std::string(to_string(config.problem)) + "-" + std::string(to_string(config.method)) +
                                  "-" + std::string(to_string(config.scale)) + "-s" + std::to_string(config.seed));
}

}  // namespace pinnuq::cli
