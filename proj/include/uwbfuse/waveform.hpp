#pragma once

// Sampled second-order Gaussian pulse, frame layout, calibrated AWGN, and
// multi-frame trial synthesis under H0 / H1 (single-path LOS, unit path gain).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace uwbfuse {

enum class Hypothesis : std::uint8_t { h0 = 0, h1 = 1 };

/// One repetition interval: T seconds sampled at fs, giving N_FR = T * fs samples.
struct FrameLayout {
  double frame_duration_s = 0.0;
  double sample_rate_hz = 0.0;
  std::size_t samples_per_frame = 0;

  /// Throws std::domain_error unless T * fs is integral (1e-9 relative) and >= 2.
  static FrameLayout make(double frame_duration_s, double sample_rate_hz);

  [[nodiscard]] double sample_period_s() const { return 1.0 / sample_rate_hz; }
  /// Sample time on the centred grid t_i = -T/2 + i * Ts.
  [[nodiscard]] double sample_time_s(std::size_t i) const;
};

/// Per-frame template s(i), identical for every frame.
class SampledPulse {
 public:
  SampledPulse() = default;

  /// Wraps arbitrary samples; energy is recomputed from them.
  static SampledPulse from_samples(const FrameLayout& layout, std::vector<double> samples,
                                   double tau_s = 0.0);

  [[nodiscard]] const FrameLayout& layout() const { return layout_; }
  [[nodiscard]] std::span<const double> samples() const { return samples_; }
  [[nodiscard]] double energy() const { return energy_; }
  [[nodiscard]] double tau_s() const { return tau_s_; }
  [[nodiscard]] std::size_t size() const { return samples_.size(); }

 private:
  SampledPulse(const FrameLayout& layout, std::vector<double> samples, double tau_s);

  FrameLayout layout_;
  std::vector<double> samples_;
  double energy_ = 0.0;
  double tau_s_ = 0.0;
};

/// Second-order Gaussian pulse
///   s(t) = -4 pi exp(-2 pi t^2 / tau^2) (4 pi t^2 - tau^2) / tau^4
/// sampled on the centred frame grid and normalized to unit sampled energy.
/// Throws std::domain_error unless 0 < tau <= frame duration.
SampledPulse gaussian2_pulse(double tau_s, const FrameLayout& layout);

enum class AlphaMode { signed_sum, absolute_sum };

/// Pulse-shape coefficient: sum of samples (or of |samples|) divided by E_P.
double alpha_coefficient(const SampledPulse& pulse, AlphaMode mode);

/// AWGN with total per-frame energy sigma^2 spread evenly over N_FR samples.
struct NoiseModel {
  double total_frame_noise_energy = 0.0;
  double per_sample_variance = 0.0;

  /// Throws std::domain_error unless sigma^2 > 0 and N_FR >= 1.
  static NoiseModel make(double total_frame_noise_energy, std::size_t samples_per_frame);
  /// sigma^2 = E_P / snr.
  static NoiseModel from_snr(double snr, double pulse_energy, std::size_t samples_per_frame);
};

/// Received samples r(n, i) for one hypothesis-test cycle, frames stored row-major.
struct TrialSamples {
  Hypothesis hypothesis = Hypothesis::h0;
  std::size_t num_frames = 0;
  std::size_t samples_per_frame = 0;
  std::vector<double> samples;
  double snr = 0.0;
  double path_gain = 1.0;

  [[nodiscard]] std::span<const double> frame(std::size_t n) const {
    return std::span<const double>(samples).subspan(n * samples_per_frame, samples_per_frame);
  }
  [[nodiscard]] double at(std::size_t n, std::size_t i) const {
    return samples[n * samples_per_frame + i];
  }
  /// The first `frames` frames as one contiguous block.
  [[nodiscard]] std::span<const double> leading(std::size_t frames) const {
    return std::span<const double>(samples).first(frames * samples_per_frame);
  }
};

/// Fills `out` with IID N(0, 1) draws from the stream (rng_seed, trial_index).
void fill_unit_noise(std::span<double> out, std::uint64_t rng_seed, std::uint64_t trial_index);

/// r = [s] + sqrt(per_sample_variance) * z, writing into `trial` (its buffer is reused).
/// `unit_noise` must hold num_frames * N_FR values.
void compose_trial(TrialSamples& trial, const SampledPulse& pulse, std::span<const double> unit_noise,
                   std::size_t num_frames, Hypothesis hypothesis, const NoiseModel& noise);

/// Deterministic function of (rng_seed, trial_index). The unit-variance draws
/// do not depend on the noise level, so trials with the same key at different
/// SNRs share one noise realization up to scale.
TrialSamples synth_trial(const SampledPulse& pulse, std::size_t num_frames, Hypothesis hypothesis,
                         const NoiseModel& noise, std::uint64_t rng_seed, std::uint64_t trial_index);

}  // namespace uwbfuse
