#pragma once

// Closed-form probability of detection for the three detectors and SNR sweeps.

#include <cstddef>
#include <span>
#include <vector>

#include "uwbfuse/curve_table.hpp"
#include "uwbfuse/detectors.hpp"
#include "uwbfuse/statkernels.hpp"
#include "uwbfuse/waveform.hpp"

namespace uwbfuse {

/// (P_D, P_FA) pair characterizing one detector at one SNR.
struct OperatingPoint {
  stats::Probability pd;
  stats::Probability pfa;
};

/// Q(Q^-1(pfa) - sqrt(N_FR * n_frames * snr)).
stats::Probability pd_matched_filter(double pfa, std::size_t n_frames, std::size_t n_fr, double snr);

/// Upper tail of chi2_nu(nu * snr) at sqrt(2 nu) Q^-1(pfa) + nu, nu = n_frames * n_fr.
stats::Probability pd_energy_detector(double pfa, std::size_t n_frames, std::size_t n_fr, double snr);

/// Q(Q^-1(pfa/2) - a) + Q(Q^-1(pfa/2) + a), a = alpha * sqrt(n_frames * ep * snr).
stats::Probability pd_amplitude_detector(double pfa, std::size_t n_frames, double ep, double snr, double alpha);

/// Pulse-shape coefficient that the amplitude curve uses for a given statistic:
/// the signed sum for abs_of_sum, the absolute sum otherwise.
AlphaMode alpha_mode_for(AmplitudeVariant variant);

/// Analytic P_D of a configured detector at linear snr.
stats::Probability pd_for(const DetectorConfig& config, const FrameLayout& layout, const SampledPulse& pulse,
                          double snr);

OperatingPoint operating_point(const DetectorConfig& config, const FrameLayout& layout,
                               const SampledPulse& pulse, double snr);

/// One "<label>_pd" column per config on the given dB grid.
CurveTable sweep_curves(std::span<const DetectorConfig> configs, const FrameLayout& layout,
                        const SampledPulse& pulse, std::span<const double> snr_grid_db);

}  // namespace uwbfuse
