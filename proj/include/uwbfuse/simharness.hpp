#pragma once

// Seeded Monte Carlo experiments: per-detector P_D / P_FA versus SNR, fused
// P_D / P_E for counting and MAP rules, and SNR gain at a target P_D.
//
// Every trial draws its noise from a counter-based stream keyed by
// (seed, hypothesis, trial index). The unit-variance draws are reused at all
// grid points (scaled to each SNR), and per-trial results are reduced as
// integer counts, so a report depends only on the scenario, never on the
// number of workers.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwbfuse/curve_table.hpp"
#include "uwbfuse/detectors.hpp"
#include "uwbfuse/fusion.hpp"
#include "uwbfuse/waveform.hpp"

namespace uwbfuse {

enum class RulePreset { and_rule, or_rule, majority, counting, map };

/// A fusion rule as configured; counting thresholds resolve against the
/// scenario's detector count, MAP weights against each grid SNR.
struct FusionRuleSpec {
  std::string label;
  RulePreset preset = RulePreset::or_rule;
  std::size_t k = 1;  // RulePreset::counting only
  Priors priors;      // RulePreset::map only

  [[nodiscard]] FusionRule resolve_counting(std::size_t detectors) const;
};

/// Shared: every detector sees the same received samples (one receiver front
/// end). Independent: each detector draws its own noise.
enum class NoiseSharing { shared, independent };

/// Where MAP rules get (P_D, P_FA): analytic curves at the true SNR, or a
/// separately seeded pilot run.
enum class OperatingPointSource { genie, empirical };

struct Scenario {
  SampledPulse pulse;
  std::vector<DetectorConfig> detectors;
  std::vector<double> snr_grid_db;
  std::size_t trials_per_hypothesis = 1000;
  std::uint64_t seed = 0;
  std::vector<FusionRuleSpec> fusion_rules;
  CalibrationMethod calibration = CalibrationMethod::analytic;
  std::size_t calibration_trials = 0;  // empirical calibration; 0 means 10 * trials_per_hypothesis
  NoiseSharing noise_sharing = NoiseSharing::shared;
  OperatingPointSource operating_points = OperatingPointSource::genie;
  std::string description;  // echoed into report provenance

  [[nodiscard]] const FrameLayout& layout() const { return pulse.layout(); }
  /// N_T = max frame budget over detectors.
  [[nodiscard]] std::size_t frames_per_trial() const;
  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

struct RunOptions {
  std::size_t workers = 1;  // 0 = hardware concurrency
  bool keep_trial_log = false;
};

/// Per-trial detector decisions, indexed by (grid point, hypothesis, trial, detector).
class DecisionLog {
 public:
  DecisionLog() = default;
  DecisionLog(std::size_t grid_points, std::size_t trials, std::size_t detectors);

  [[nodiscard]] Decision at(std::size_t grid, Hypothesis h, std::size_t trial, std::size_t detector) const {
    return bits_[offset(grid, h, trial) + detector];
  }
  [[nodiscard]] std::span<const Decision> vector(std::size_t grid, Hypothesis h, std::size_t trial) const {
    return std::span<const Decision>(bits_).subspan(offset(grid, h, trial), detectors_);
  }
  std::span<Decision> mutable_vector(std::size_t grid, Hypothesis h, std::size_t trial) {
    return std::span<Decision>(bits_).subspan(offset(grid, h, trial), detectors_);
  }
  [[nodiscard]] std::size_t grid_points() const { return grid_points_; }
  [[nodiscard]] std::size_t trials() const { return trials_; }
  [[nodiscard]] std::size_t detectors() const { return detectors_; }

 private:
  [[nodiscard]] std::size_t offset(std::size_t grid, Hypothesis h, std::size_t trial) const {
    return ((grid * 2 + static_cast<std::size_t>(h)) * trials_ + trial) * detectors_;
  }

  std::size_t grid_points_ = 0;
  std::size_t trials_ = 0;
  std::size_t detectors_ = 0;
  std::vector<Decision> bits_;
};

/// Number of trials deciding H1, per grid point and column (detector or rule).
struct HitCounts {
  std::vector<std::vector<std::size_t>> h1;  // [grid][column], H1 trials
  std::vector<std::vector<std::size_t>> h0;  // [grid][column], H0 trials
};

struct Provenance {
  std::uint64_t seed = 0;
  std::size_t trials_per_hypothesis = 0;
  std::string config_echo;
};

struct EmpiricalReport {
  CurveTable per_detector;  // "<label>_pd", "<label>_pfa"
  CurveTable per_rule;      // "<rule>_pd", "<rule>_pe"
  HitCounts detector_hits;
  HitCounts rule_hits;
  std::vector<std::vector<Threshold>> thresholds;       // [grid][detector]
  std::vector<std::vector<FusionRule>> resolved_rules;  // [grid][rule]
  std::optional<DecisionLog> trial_decisions;
  Provenance provenance;
};

/// Per-detector empirical P_D and P_FA on the scenario grid (fusion rules ignored).
EmpiricalReport run_detection_experiment(const Scenario& scenario, const RunOptions& options = {});

/// Detector and fused statistics; requires at least one fusion rule.
/// P_E = (misses on H1 trials + false alarms on H0 trials) / (2 * trials).
EmpiricalReport run_fusion_experiment(const Scenario& scenario, const RunOptions& options = {});

/// Writes the per-trial decision log as CSV: snr_db,trial_index,hypothesis,<label>...
void write_trial_log_csv(std::ostream& out, const EmpiricalReport& report, const Scenario& scenario);

/// Thrown when a curve never reaches the target within the grid.
class OutOfRangeError : public std::runtime_error {
 public:
  OutOfRangeError(std::string curve, const std::string& message)
      : std::runtime_error(message), curve_(std::move(curve)) {}
  [[nodiscard]] const std::string& curve() const { return curve_; }

 private:
  std::string curve_;
};

/// Pool-adjacent-violators fit: the closest non-decreasing sequence in least squares.
std::vector<double> isotonic_nondecreasing(std::span<const double> values);

/// Linear interpolation of `values` at snr_db (clamped to the grid ends).
double interpolate_at(std::span<const double> grid_db, std::span<const double> values, double snr_db);

struct NamedCurve {
  std::string name;
  std::span<const double> values;
};

/// SNR (dB) at which the isotonic fit of `curve` first reaches target_pd,
/// by linear interpolation between grid points. Throws OutOfRangeError if the
/// curve never reaches the target or already exceeds it at the first point.
double snr_at(double target_pd, const NamedCurve& curve, std::span<const double> grid_db);

/// snr_at(curve_a) - snr_at(curve_b).
double snr_gain_at(double target_pd, const NamedCurve& curve_a, const NamedCurve& curve_b,
                   std::span<const double> grid_db);

}  // namespace uwbfuse
