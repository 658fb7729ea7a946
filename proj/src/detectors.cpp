#include "uwbfuse/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "uwbfuse/rng.hpp"

namespace uwbfuse {

namespace {

double matched_filter_statistic(const TrialSamples& trial, std::span<const double> s, std::size_t frames) {
  double total = 0.0;
  for (std::size_t n = 0; n < frames; ++n) {
    const auto r = trial.frame(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += r[i] * s[i];
    total += acc;
  }
  return total;
}

double aligned_sum(const TrialSamples& trial, std::span<const double> s, std::size_t frames) {
  double total = 0.0;
  for (std::size_t n = 0; n < frames; ++n) {
    const auto r = trial.frame(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += s[i] >= 0.0 ? r[i] : -r[i];
    total += acc;
  }
  return total;
}

// ceil(x) for x that should be an integer up to rounding noise.
std::size_t ceil_count(double x) {
  const double nearest = std::round(x);
  if (std::fabs(x - nearest) < 1e-9 * std::max(1.0, x)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(x));
}

double analytic_threshold(const DetectorConfig& config, const FrameLayout& layout, const NoiseModel& noise,
                          const SampledPulse& pulse) {
  const double pfa = config.pfa.value();
  const auto frames = static_cast<double>(config.frame_budget);
  const auto n_fr = static_cast<double>(layout.samples_per_frame);
  const double sigma2 = noise.total_frame_noise_energy;
  const double sample_var = noise.per_sample_variance;

  switch (config.kind.type()) {
    case DetectorType::matched_filter:
      return stats::normal_tail_inv(pfa) * std::sqrt(frames * pulse.energy() * sample_var);
    case DetectorType::energy: {
      const double dof = frames * n_fr;
      return sample_var * (std::sqrt(2.0 * dof) * stats::normal_tail_inv(pfa) + dof);
    }
    case DetectorType::amplitude:
      break;
  }
  switch (*config.kind.variant()) {
    case AmplitudeVariant::abs_of_sum:
    case AmplitudeVariant::abs_of_aligned_sum:
      // Sum of frames * N_FR noise samples has variance frames * sigma^2.
      return stats::normal_tail_inv(0.5 * pfa) * std::sqrt(frames * sigma2);
    case AmplitudeVariant::sum_of_abs: {
      // Folded normal per sample: mean sd sqrt(2/pi), variance sd^2 (1 - 2/pi).
      const double count = frames * n_fr;
      const double sd = std::sqrt(sample_var);
      const double mean = count * sd * std::sqrt(2.0 / std::numbers::pi);
      const double var = count * sample_var * (1.0 - 2.0 / std::numbers::pi);
      return mean + stats::normal_tail_inv(pfa) * std::sqrt(var);
    }
  }
  throw std::logic_error("unreachable detector kind");
}

}  // namespace

std::string_view to_string(DetectorType type) {
  switch (type) {
    case DetectorType::matched_filter: return "matched_filter";
    case DetectorType::energy: return "energy";
    case DetectorType::amplitude: return "amplitude";
  }
  return "?";
}

std::string_view to_string(AmplitudeVariant variant) {
  switch (variant) {
    case AmplitudeVariant::sum_of_abs: return "sum_of_abs";
    case AmplitudeVariant::abs_of_sum: return "abs_of_sum";
    case AmplitudeVariant::abs_of_aligned_sum: return "abs_of_aligned_sum";
  }
  return "?";
}

std::optional<DetectorType> parse_detector_type(std::string_view text) {
  for (auto t : {DetectorType::matched_filter, DetectorType::energy, DetectorType::amplitude}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::optional<AmplitudeVariant> parse_amplitude_variant(std::string_view text) {
  for (auto v : {AmplitudeVariant::sum_of_abs, AmplitudeVariant::abs_of_sum,
                 AmplitudeVariant::abs_of_aligned_sum}) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

DetectorConfig DetectorConfig::make(DetectorKind kind, double pfa, std::size_t frame_budget, std::string label) {
  if (!(pfa > 0.0 && pfa < 1.0)) throw std::domain_error("detector config: pfa must lie in (0, 1)");
  if (frame_budget == 0) throw std::domain_error("detector config: frame budget must be >= 1");
  return DetectorConfig{kind, stats::Probability(pfa), frame_budget, std::move(label)};
}

double test_statistic(const DetectorKind& kind, const TrialSamples& trial, const SampledPulse& pulse,
                      std::size_t frame_budget) {
  if (frame_budget == 0 || frame_budget > trial.num_frames) {
    throw std::domain_error("test_statistic: frame budget exceeds the frames in the trial");
  }
  if (trial.samples_per_frame != pulse.size()) {
    throw std::invalid_argument("test_statistic: pulse and trial frame sizes differ");
  }
  const auto s = pulse.samples();
  const auto r = trial.leading(frame_budget);

  switch (kind.type()) {
    case DetectorType::matched_filter:
      return matched_filter_statistic(trial, s, frame_budget);
    case DetectorType::energy: {
      double total = 0.0;
      for (const double x : r) total += x * x;
      return total;
    }
    case DetectorType::amplitude:
      break;
  }
  switch (*kind.variant()) {
    case AmplitudeVariant::sum_of_abs: {
      double total = 0.0;
      for (const double x : r) total += std::fabs(x);
      return total;
    }
    case AmplitudeVariant::abs_of_sum: {
      double total = 0.0;
      for (const double x : r) total += x;
      return std::fabs(total);
    }
    case AmplitudeVariant::abs_of_aligned_sum:
      return std::fabs(aligned_sum(trial, s, frame_budget));
  }
  throw std::logic_error("unreachable detector kind");
}

Threshold calibrate_threshold(const DetectorConfig& config, const FrameLayout& layout,
                              const NoiseModel& noise, const SampledPulse& pulse,
                              CalibrationMethod method, std::size_t empirical_trials, std::uint64_t seed) {
  if (layout.samples_per_frame != pulse.size()) {
    throw std::invalid_argument("calibrate_threshold: pulse does not match the frame layout");
  }
  if (method == CalibrationMethod::analytic) {
    return Threshold{analytic_threshold(config, layout, noise, pulse), CalibrationMethod::analytic,
                     std::nullopt};
  }

  const double pfa = config.pfa.value();
  if (static_cast<double>(empirical_trials) < 100.0 / pfa) {
    throw CalibrationError("calibrate_threshold: " + std::to_string(empirical_trials) +
                           " H0 trials cannot resolve pfa=" + std::to_string(pfa) + " for detector '" +
                           config.label + "' (need >= 100/pfa)");
  }

  // H0 statistics are homogeneous in the noise scale, so draw at unit
  // per-sample variance and rescale the order statistic.
  const auto unit = NoiseModel::make(static_cast<double>(layout.samples_per_frame), layout.samples_per_frame);
  std::vector<double> draws(config.frame_budget * layout.samples_per_frame);
  std::vector<double> statistics(empirical_trials);
  TrialSamples trial;
  for (std::size_t t = 0; t < empirical_trials; ++t) {
    fill_unit_noise(draws, seed, t);
    compose_trial(trial, pulse, draws, config.frame_budget, Hypothesis::h0, unit);
    statistics[t] = test_statistic(config.kind, trial, pulse, config.frame_budget);
  }

  const std::size_t rank = std::max<std::size_t>(1, ceil_count((1.0 - pfa) * static_cast<double>(empirical_trials)));
  std::nth_element(statistics.begin(), statistics.begin() + static_cast<std::ptrdiff_t>(rank - 1), statistics.end());
  const double unit_value = statistics[rank - 1];
  const double scale = std::pow(std::sqrt(noise.per_sample_variance), config.kind.homogeneity_degree());
  return Threshold{unit_value * scale, CalibrationMethod::empirical, empirical_trials};
}

}  // namespace uwbfuse
