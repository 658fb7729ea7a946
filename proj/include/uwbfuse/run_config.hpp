#pragma once

// JSON run configuration (schema 1). Every object is checked against its
// allowed keys before anything is computed; the first problem is reported
// with the path of the offending field.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwbfuse/detectors.hpp"
#include "uwbfuse/simharness.hpp"

namespace uwbfuse {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kConfigSchemaVersion = 1;

struct RunConfig {
  double tau_ns = 3.33;
  double frame_ns = 10.0;
  double sample_rate_ghz = 5.0;
  std::vector<DetectorConfig> detectors;
  double start_db = -30.0;
  double stop_db = 5.0;
  double step_db = 0.5;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  std::vector<FusionRuleSpec> fusion;
  CalibrationMethod calibration = CalibrationMethod::analytic;
  std::size_t calibration_trials = 0;
  NoiseSharing noise_sharing = NoiseSharing::shared;
  OperatingPointSource operating_points = OperatingPointSource::genie;
  std::string output_dir;

  /// The shipped reproduction config: MF (pfa 1e-7, 100 frames), ED (1e-1, 1000),
  /// AD (1e-4, 100) with OR / AND / majority / MAP fusion.
  static RunConfig reproduction_default();

  /// Throws ConfigError naming the offending field.
  static RunConfig from_json(const nlohmann::json& doc);
  /// Throws IoError if unreadable, ConfigError if invalid.
  static RunConfig load(const std::filesystem::path& path);

  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] std::vector<double> snr_grid() const;
  [[nodiscard]] SampledPulse pulse() const;
  [[nodiscard]] Scenario to_scenario() const;
};

}  // namespace uwbfuse
