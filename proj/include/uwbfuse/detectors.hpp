#pragma once

// Test statistics for the matched-filter, energy and amplitude detectors,
// Neyman-Pearson threshold calibration at a configured false-alarm rate, and
// the hard decision.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "uwbfuse/statkernels.hpp"
#include "uwbfuse/waveform.hpp"

namespace uwbfuse {

enum class DetectorType { matched_filter, energy, amplitude };

/// How the amplitude detector forms its statistic from the samples r(n, i):
///   sum_of_abs          sum |r|
///   abs_of_sum          |sum r|
///   abs_of_aligned_sum  |sum r * p(i)| with p(i) = +1 if s(i) >= 0 else -1
enum class AmplitudeVariant { sum_of_abs, abs_of_sum, abs_of_aligned_sum };

class DetectorKind {
 public:
  static DetectorKind matched_filter() { return DetectorKind(DetectorType::matched_filter, std::nullopt); }
  static DetectorKind energy() { return DetectorKind(DetectorType::energy, std::nullopt); }
  static DetectorKind amplitude(AmplitudeVariant variant) {
    return DetectorKind(DetectorType::amplitude, variant);
  }

  [[nodiscard]] DetectorType type() const { return type_; }
  /// Present iff type() == amplitude.
  [[nodiscard]] std::optional<AmplitudeVariant> variant() const { return variant_; }

  /// Statistic scales as sd^degree when H0 noise is scaled by sd.
  [[nodiscard]] int homogeneity_degree() const { return type_ == DetectorType::energy ? 2 : 1; }

  bool operator==(const DetectorKind&) const = default;

 private:
  DetectorKind(DetectorType type, std::optional<AmplitudeVariant> variant)
      : type_(type), variant_(variant) {}

  DetectorType type_;
  std::optional<AmplitudeVariant> variant_;
};

std::string_view to_string(DetectorType type);
std::string_view to_string(AmplitudeVariant variant);
std::optional<DetectorType> parse_detector_type(std::string_view text);
std::optional<AmplitudeVariant> parse_amplitude_variant(std::string_view text);

struct DetectorConfig {
  DetectorKind kind = DetectorKind::matched_filter();
  stats::Probability pfa;
  std::size_t frame_budget = 1;
  std::string label;

  /// Throws std::domain_error unless 0 < pfa < 1 and frame_budget >= 1.
  static DetectorConfig make(DetectorKind kind, double pfa, std::size_t frame_budget, std::string label);
};

enum class CalibrationMethod { analytic, empirical };

struct Threshold {
  double value = 0.0;
  CalibrationMethod calibration = CalibrationMethod::analytic;
  std::optional<std::size_t> empirical_trials;
};

enum class Decision : std::uint8_t { h0 = 0, h1 = 1 };

constexpr int to_bit(Decision d) { return static_cast<int>(d); }

/// Thrown when a threshold cannot be calibrated as requested.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sums f(r(n, i)) over the first frame_budget frames of the trial.
/// Throws std::domain_error if frame_budget is zero or exceeds the trial.
double test_statistic(const DetectorKind& kind, const TrialSamples& trial, const SampledPulse& pulse,
                      std::size_t frame_budget);

/// Analytic thresholds assume sigma^2 is known. The empirical method takes the
/// ceil((1 - pfa) n)-th order statistic of n H0 trials and needs n >= 100 / pfa.
Threshold calibrate_threshold(const DetectorConfig& config, const FrameLayout& layout,
                              const NoiseModel& noise, const SampledPulse& pulse,
                              CalibrationMethod method, std::size_t empirical_trials = 0,
                              std::uint64_t seed = 0);

/// H1 iff statistic > threshold; ties go to H0.
constexpr Decision decide(double statistic, const Threshold& threshold) {
  return statistic > threshold.value ? Decision::h1 : Decision::h0;
}

}  // namespace uwbfuse
