#include "uwbfuse/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "uwbfuse/curve_table.hpp"

namespace uwbfuse {

using nlohmann::json;

namespace {

void check_keys(const json& object, const std::string& path, const std::set<std::string>& allowed) {
  if (!object.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + (path.empty() ? key : path + "." + key) + "'");
  }
}

const json& require(const json& object, const std::string& key, const std::string& path) {
  const auto it = object.find(key);
  if (it == object.end()) throw ConfigError("missing required field '" + (path.empty() ? key : path + "." + key) + "'");
  return *it;
}

double get_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw ConfigError(path + ": expected a number");
  const double x = value.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path + ": must be finite");
  return x;
}

double get_positive(const json& value, const std::string& path) {
  const double x = get_number(value, path);
  if (!(x > 0.0)) throw ConfigError(path + ": must be positive");
  return x;
}

std::uint64_t get_unsigned(const json& value, const std::string& path) {
  const bool ok = value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0);
  if (!ok) throw ConfigError(path + ": expected a non-negative integer");
  return value.get<std::uint64_t>();
}

std::string get_string(const json& value, const std::string& path) {
  if (!value.is_string()) throw ConfigError(path + ": expected a string");
  return value.get<std::string>();
}

DetectorConfig parse_detector(const json& node, const std::string& path) {
  check_keys(node, path, {"label", "kind", "amplitude_variant", "pfa", "frames"});
  const auto label = get_string(require(node, "label", path), path + ".label");
  if (label.empty()) throw ConfigError(path + ".label: must be non-empty");
  const auto kind_text = get_string(require(node, "kind", path), path + ".kind");
  const auto type = parse_detector_type(kind_text);
  if (!type) throw ConfigError(path + ".kind: unknown detector kind '" + kind_text + "'");

  std::optional<DetectorKind> kind;
  switch (*type) {
    case DetectorType::matched_filter: kind = DetectorKind::matched_filter(); break;
    case DetectorType::energy: kind = DetectorKind::energy(); break;
    case DetectorType::amplitude: {
      auto variant = AmplitudeVariant::abs_of_aligned_sum;
      if (node.contains("amplitude_variant")) {
        const auto text = get_string(node["amplitude_variant"], path + ".amplitude_variant");
        const auto parsed = parse_amplitude_variant(text);
        if (!parsed) throw ConfigError(path + ".amplitude_variant: unknown variant '" + text + "'");
        variant = *parsed;
      }
      kind = DetectorKind::amplitude(variant);
      break;
    }
  }
  if (*type != DetectorType::amplitude && node.contains("amplitude_variant")) {
    throw ConfigError(path + ".amplitude_variant: only valid for kind 'amplitude'");
  }
  const double pfa = get_number(require(node, "pfa", path), path + ".pfa");
  if (!(pfa > 0.0 && pfa < 1.0)) throw ConfigError(path + ".pfa: must lie in (0, 1)");
  const auto frames = get_unsigned(require(node, "frames", path), path + ".frames");
  if (frames == 0) throw ConfigError(path + ".frames: must be >= 1");
  return DetectorConfig::make(*kind, pfa, frames, label);
}

FusionRuleSpec parse_rule(const json& node, const std::string& path) {
  check_keys(node, path, {"rule", "k", "priors", "label"});
  const auto rule = get_string(require(node, "rule", path), path + ".rule");
  FusionRuleSpec spec;
  if (rule == "and") {
    spec.preset = RulePreset::and_rule;
  } else if (rule == "or") {
    spec.preset = RulePreset::or_rule;
  } else if (rule == "majority") {
    spec.preset = RulePreset::majority;
  } else if (rule == "counting") {
    spec.preset = RulePreset::counting;
  } else if (rule == "map") {
    spec.preset = RulePreset::map;
  } else {
    throw ConfigError(path + ".rule: unknown fusion rule '" + rule + "'");
  }

  if (node.contains("k")) {
    if (spec.preset != RulePreset::counting) throw ConfigError(path + ".k: only valid for rule 'counting'");
    spec.k = get_unsigned(node["k"], path + ".k");
  } else if (spec.preset == RulePreset::counting) {
    throw ConfigError("missing required field '" + path + ".k'");
  }

  if (node.contains("priors")) {
    if (spec.preset != RulePreset::map) throw ConfigError(path + ".priors: only valid for rule 'map'");
    const auto& priors = node["priors"];
    if (!priors.is_array() || priors.size() != 2) throw ConfigError(path + ".priors: expected [P0, P1]");
    try {
      spec.priors = Priors::make(get_number(priors[0], path + ".priors[0]"), get_number(priors[1], path + ".priors[1]"));
    } catch (const std::domain_error& e) {
      throw ConfigError(path + ".priors: " + e.what());
    }
  }

  if (node.contains("label")) {
    spec.label = get_string(node["label"], path + ".label");
  } else {
    spec.label = spec.preset == RulePreset::counting ? "k" + std::to_string(spec.k) : rule;
  }
  return spec;
}

std::string preset_name(RulePreset preset) {
  switch (preset) {
    case RulePreset::and_rule: return "and";
    case RulePreset::or_rule: return "or";
    case RulePreset::majority: return "majority";
    case RulePreset::counting: return "counting";
    case RulePreset::map: return "map";
  }
  return "?";
}

}  // namespace

RunConfig RunConfig::reproduction_default() {
  RunConfig config;
  config.detectors = {
      DetectorConfig::make(DetectorKind::matched_filter(), 1e-7, 100, "MF"),
      DetectorConfig::make(DetectorKind::energy(), 1e-1, 1000, "ED"),
      DetectorConfig::make(DetectorKind::amplitude(AmplitudeVariant::abs_of_aligned_sum), 1e-4, 100, "AD"),
  };
  config.seed = 2017;
  config.fusion = {
      FusionRuleSpec{"or", RulePreset::or_rule, 1, {}},
      FusionRuleSpec{"and", RulePreset::and_rule, 1, {}},
      FusionRuleSpec{"majority", RulePreset::majority, 1, {}},
      FusionRuleSpec{"map", RulePreset::map, 1, {}},
  };
  return config;
}

RunConfig RunConfig::from_json(const json& doc) {
  check_keys(doc, "", {"schema", "pulse", "detectors", "snr_grid", "trials", "seed", "fusion", "calibration",
                       "calibration_trials", "noise_sharing", "operating_points", "output_dir"});
  const auto schema = get_unsigned(require(doc, "schema", ""), "schema");
  if (schema != kConfigSchemaVersion) {
    throw ConfigError("schema: unsupported version " + std::to_string(schema) + " (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }

  RunConfig config;
  const auto& pulse = require(doc, "pulse", "");
  check_keys(pulse, "pulse", {"tau_ns", "frame_ns", "sample_rate_ghz"});
  config.tau_ns = get_positive(require(pulse, "tau_ns", "pulse"), "pulse.tau_ns");
  config.frame_ns = get_positive(require(pulse, "frame_ns", "pulse"), "pulse.frame_ns");
  config.sample_rate_ghz = get_positive(require(pulse, "sample_rate_ghz", "pulse"), "pulse.sample_rate_ghz");

  const auto& detectors = require(doc, "detectors", "");
  if (!detectors.is_array() || detectors.empty()) throw ConfigError("detectors: expected a non-empty array");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < detectors.size(); ++i) {
    const std::string path = "detectors[" + std::to_string(i) + "]";
    config.detectors.push_back(parse_detector(detectors[i], path));
    if (!labels.insert(config.detectors.back().label).second) {
      throw ConfigError(path + ".label: duplicate label '" + config.detectors.back().label + "'");
    }
  }

  const auto& grid = require(doc, "snr_grid", "");
  check_keys(grid, "snr_grid", {"start_db", "stop_db", "step_db"});
  config.start_db = get_number(require(grid, "start_db", "snr_grid"), "snr_grid.start_db");
  config.stop_db = get_number(require(grid, "stop_db", "snr_grid"), "snr_grid.stop_db");
  config.step_db = get_positive(require(grid, "step_db", "snr_grid"), "snr_grid.step_db");
  if (config.stop_db < config.start_db) throw ConfigError("snr_grid.stop_db: must be >= start_db");

  config.trials = get_unsigned(require(doc, "trials", ""), "trials");
  if (config.trials < 100) throw ConfigError("trials: must be >= 100");
  config.seed = get_unsigned(require(doc, "seed", ""), "seed");

  if (doc.contains("fusion")) {
    const auto& fusion = doc["fusion"];
    if (!fusion.is_array()) throw ConfigError("fusion: expected an array");
    std::set<std::string> rule_labels;
    for (std::size_t i = 0; i < fusion.size(); ++i) {
      const std::string path = "fusion[" + std::to_string(i) + "]";
      auto spec = parse_rule(fusion[i], path);
      if (spec.preset == RulePreset::counting && (spec.k < 1 || spec.k > config.detectors.size())) {
        throw ConfigError(path + ".k: must satisfy 1 <= k <= " + std::to_string(config.detectors.size()));
      }
      if (!rule_labels.insert(spec.label).second) throw ConfigError(path + ": duplicate rule label '" + spec.label + "'");
      config.fusion.push_back(std::move(spec));
    }
  }

  const auto calibration = get_string(require(doc, "calibration", ""), "calibration");
  if (calibration == "analytic") {
    config.calibration = CalibrationMethod::analytic;
  } else if (calibration == "empirical") {
    config.calibration = CalibrationMethod::empirical;
  } else {
    throw ConfigError("calibration: expected 'analytic' or 'empirical'");
  }
  if (doc.contains("calibration_trials")) config.calibration_trials = get_unsigned(doc["calibration_trials"], "calibration_trials");

  if (doc.contains("noise_sharing")) {
    const auto text = get_string(doc["noise_sharing"], "noise_sharing");
    if (text == "shared") {
      config.noise_sharing = NoiseSharing::shared;
    } else if (text == "independent") {
      config.noise_sharing = NoiseSharing::independent;
    } else {
      throw ConfigError("noise_sharing: expected 'shared' or 'independent'");
    }
  }
  if (doc.contains("operating_points")) {
    const auto text = get_string(doc["operating_points"], "operating_points");
    if (text == "genie") {
      config.operating_points = OperatingPointSource::genie;
    } else if (text == "empirical") {
      config.operating_points = OperatingPointSource::empirical;
    } else {
      throw ConfigError("operating_points: expected 'genie' or 'empirical'");
    }
  }
  if (doc.contains("output_dir")) config.output_dir = get_string(doc["output_dir"], "output_dir");

  // Layout and pulse constraints surface here rather than mid-run.
  try {
    (void)config.pulse();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("pulse: ") + e.what());
  }
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

json RunConfig::to_json() const {
  json doc;
  doc["schema"] = kConfigSchemaVersion;
  doc["pulse"] = {{"tau_ns", tau_ns}, {"frame_ns", frame_ns}, {"sample_rate_ghz", sample_rate_ghz}};
  doc["detectors"] = json::array();
  for (const auto& d : detectors) {
    json node = {{"label", d.label},
                 {"kind", std::string(to_string(d.kind.type()))},
                 {"pfa", d.pfa.value()},
                 {"frames", d.frame_budget}};
    if (d.kind.variant()) node["amplitude_variant"] = std::string(to_string(*d.kind.variant()));
    doc["detectors"].push_back(std::move(node));
  }
  doc["snr_grid"] = {{"start_db", start_db}, {"stop_db", stop_db}, {"step_db", step_db}};
  doc["trials"] = trials;
  doc["seed"] = seed;
  doc["fusion"] = json::array();
  for (const auto& r : fusion) {
    json node = {{"rule", preset_name(r.preset)}, {"label", r.label}};
    if (r.preset == RulePreset::counting) node["k"] = r.k;
    if (r.preset == RulePreset::map) node["priors"] = {r.priors.h0, r.priors.h1};
    doc["fusion"].push_back(std::move(node));
  }
  doc["calibration"] = calibration == CalibrationMethod::analytic ? "analytic" : "empirical";
  if (calibration_trials > 0) doc["calibration_trials"] = calibration_trials;
  doc["noise_sharing"] = noise_sharing == NoiseSharing::shared ? "shared" : "independent";
  doc["operating_points"] = operating_points == OperatingPointSource::genie ? "genie" : "empirical";
  if (!output_dir.empty()) doc["output_dir"] = output_dir;
  return doc;
}

std::vector<double> RunConfig::snr_grid() const { return make_snr_grid(start_db, stop_db, step_db); }

SampledPulse RunConfig::pulse() const {
  const auto layout = FrameLayout::make(frame_ns * 1e-9, sample_rate_ghz * 1e9);
  return gaussian2_pulse(tau_ns * 1e-9, layout);
}

Scenario RunConfig::to_scenario() const {
  Scenario scenario;
  scenario.pulse = pulse();
  scenario.detectors = detectors;
  scenario.snr_grid_db = snr_grid();
  scenario.trials_per_hypothesis = trials;
  scenario.seed = seed;
  scenario.fusion_rules = fusion;
  scenario.calibration = calibration;
  scenario.calibration_trials = calibration_trials;
  scenario.noise_sharing = noise_sharing;
  scenario.operating_points = operating_points;
  scenario.description = to_json().dump();
  return scenario;
}

}  // namespace uwbfuse
