#include "uwbfuse/waveform.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "uwbfuse/rng.hpp"

namespace uwbfuse {

FrameLayout FrameLayout::make(double frame_duration_s, double sample_rate_hz) {
  if (!(frame_duration_s > 0.0) || !(sample_rate_hz > 0.0) || !std::isfinite(frame_duration_s) ||
      !std::isfinite(sample_rate_hz)) {
    throw std::domain_error("frame layout: duration and sample rate must be positive");
  }
  const double product = frame_duration_s * sample_rate_hz;
  const double rounded = std::round(product);
  if (std::fabs(product - rounded) > 1e-9 * product) {
    throw std::domain_error("frame layout: frame duration times sample rate is not an integer");
  }
  if (rounded < 2.0) {
    throw std::domain_error("frame layout: need at least two samples per frame");
  }
  return FrameLayout{frame_duration_s, sample_rate_hz, static_cast<std::size_t>(rounded)};
}

double FrameLayout::sample_time_s(std::size_t i) const {
  return -0.5 * frame_duration_s + static_cast<double>(i) / sample_rate_hz;
}

SampledPulse::SampledPulse(const FrameLayout& layout, std::vector<double> samples, double tau_s)
    : layout_(layout), samples_(std::move(samples)), tau_s_(tau_s) {
  energy_ = std::inner_product(samples_.begin(), samples_.end(), samples_.begin(), 0.0);
}

SampledPulse SampledPulse::from_samples(const FrameLayout& layout, std::vector<double> samples,
                                        double tau_s) {
  if (samples.size() != layout.samples_per_frame) {
    throw std::invalid_argument("pulse: sample count does not match the frame layout");
  }
  return SampledPulse(layout, std::move(samples), tau_s);
}

SampledPulse gaussian2_pulse(double tau_s, const FrameLayout& layout) {
  if (!(tau_s > 0.0) || tau_s > layout.frame_duration_s) {
    throw std::domain_error("gaussian2_pulse: tau must lie in (0, frame duration]");
  }
  const double pi = std::numbers::pi;
  const double tau2 = tau_s * tau_s;
  std::vector<double> samples(layout.samples_per_frame);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double t = layout.sample_time_s(i);
    samples[i] = -4.0 * pi * std::exp(-2.0 * pi * t * t / tau2) * (4.0 * pi * t * t - tau2) /
                 (tau2 * tau2);
  }
  // Normalize the sampled vector, not the continuous-time pulse.
  const double norm = std::sqrt(std::inner_product(samples.begin(), samples.end(), samples.begin(), 0.0));
  for (double& s : samples) s /= norm;
  return SampledPulse::from_samples(layout, std::move(samples), tau_s);
}

double alpha_coefficient(const SampledPulse& pulse, AlphaMode mode) {
  if (!(pulse.energy() > 0.0)) throw std::domain_error("alpha_coefficient: pulse has zero energy");
  double sum = 0.0;
  for (const double s : pulse.samples()) sum += mode == AlphaMode::signed_sum ? s : std::fabs(s);
  return sum / pulse.energy();
}

NoiseModel NoiseModel::make(double total_frame_noise_energy, std::size_t samples_per_frame) {
  if (!(total_frame_noise_energy > 0.0) || !std::isfinite(total_frame_noise_energy)) {
    throw std::domain_error("noise model: total frame noise energy must be positive");
  }
  if (samples_per_frame == 0) throw std::domain_error("noise model: empty frame");
  return NoiseModel{total_frame_noise_energy,
                    total_frame_noise_energy / static_cast<double>(samples_per_frame)};
}

NoiseModel NoiseModel::from_snr(double snr, double pulse_energy, std::size_t samples_per_frame) {
  if (!(snr > 0.0) || !std::isfinite(snr)) throw std::domain_error("noise model: snr must be positive");
  return make(pulse_energy / snr, samples_per_frame);
}

void fill_unit_noise(std::span<double> out, std::uint64_t rng_seed, std::uint64_t trial_index) {
  rng::Philox4x32 engine(rng_seed, trial_index);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  for (double& z : out) z = normal(engine);
}

void compose_trial(TrialSamples& trial, const SampledPulse& pulse, std::span<const double> unit_noise,
                   std::size_t num_frames, Hypothesis hypothesis, const NoiseModel& noise) {
  const std::size_t n_fr = pulse.size();
  const std::size_t total = num_frames * n_fr;
  if (num_frames == 0) throw std::domain_error("trial synthesis: num_frames must be positive");
  if (unit_noise.size() < total) throw std::invalid_argument("trial synthesis: not enough noise draws");

  trial.hypothesis = hypothesis;
  trial.num_frames = num_frames;
  trial.samples_per_frame = n_fr;
  trial.snr = pulse.energy() / noise.total_frame_noise_energy;
  trial.path_gain = 1.0;
  trial.samples.resize(total);

  const double sd = std::sqrt(noise.per_sample_variance);
  const auto s = pulse.samples();
  double* out = trial.samples.data();
  const double* z = unit_noise.data();
  if (hypothesis == Hypothesis::h1) {
    for (std::size_t n = 0; n < num_frames; ++n) {
      for (std::size_t i = 0; i < n_fr; ++i) out[n * n_fr + i] = s[i] + sd * z[n * n_fr + i];
    }
  } else {
    for (std::size_t k = 0; k < total; ++k) out[k] = sd * z[k];
  }
}

TrialSamples synth_trial(const SampledPulse& pulse, std::size_t num_frames, Hypothesis hypothesis,
                         const NoiseModel& noise, std::uint64_t rng_seed, std::uint64_t trial_index) {
  if (num_frames == 0) throw std::domain_error("synth_trial: num_frames must be positive");
  std::vector<double> unit(num_frames * pulse.size());
  fill_unit_noise(unit, rng_seed, trial_index);
  TrialSamples trial;
  compose_trial(trial, pulse, unit, num_frames, hypothesis, noise);
  return trial;
}

}  // namespace uwbfuse
