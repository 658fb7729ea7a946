#include "uwbfuse/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uwbfuse {

namespace {

void require_snr(double snr) {
  if (!(snr >= 0.0) || !std::isfinite(snr)) throw std::domain_error("snr must be finite and non-negative");
}

stats::Probability clamp_probability(double p) { return stats::Probability(std::clamp(p, 0.0, 1.0)); }

}  // namespace

stats::Probability pd_matched_filter(double pfa, std::size_t n_frames, std::size_t n_fr, double snr) {
  require_snr(snr);
  const double deflection = std::sqrt(static_cast<double>(n_fr) * static_cast<double>(n_frames) * snr);
  return clamp_probability(stats::normal_tail(stats::normal_tail_inv(pfa) - deflection));
}

stats::Probability pd_energy_detector(double pfa, std::size_t n_frames, std::size_t n_fr, double snr) {
  require_snr(snr);
  const double dof = static_cast<double>(n_frames) * static_cast<double>(n_fr);
  const double threshold = std::sqrt(2.0 * dof) * stats::normal_tail_inv(pfa) + dof;
  const auto params = stats::NoncentralChiSq::make(dof, dof * snr);
  return clamp_probability(stats::noncentral_chisq_tail(threshold, params));
}

stats::Probability pd_amplitude_detector(double pfa, std::size_t n_frames, double ep, double snr, double alpha) {
  require_snr(snr);
  const double edge = stats::normal_tail_inv(0.5 * pfa);
  const double deflection = alpha * std::sqrt(static_cast<double>(n_frames) * ep * snr);
  return clamp_probability(stats::normal_tail(edge - deflection) + stats::normal_tail(edge + deflection));
}

AlphaMode alpha_mode_for(AmplitudeVariant variant) {
  return variant == AmplitudeVariant::abs_of_sum ? AlphaMode::signed_sum : AlphaMode::absolute_sum;
}

stats::Probability pd_for(const DetectorConfig& config, const FrameLayout& layout, const SampledPulse& pulse,
                          double snr) {
  const double pfa = config.pfa.value();
  switch (config.kind.type()) {
    case DetectorType::matched_filter:
      return pd_matched_filter(pfa, config.frame_budget, layout.samples_per_frame, snr);
    case DetectorType::energy:
      return pd_energy_detector(pfa, config.frame_budget, layout.samples_per_frame, snr);
    case DetectorType::amplitude: {
      const double alpha = alpha_coefficient(pulse, alpha_mode_for(*config.kind.variant()));
      return pd_amplitude_detector(pfa, config.frame_budget, pulse.energy(), snr, alpha);
    }
  }
  throw std::logic_error("unreachable detector kind");
}

OperatingPoint operating_point(const DetectorConfig& config, const FrameLayout& layout,
                               const SampledPulse& pulse, double snr) {
  return OperatingPoint{pd_for(config, layout, pulse, snr), config.pfa};
}

CurveTable sweep_curves(std::span<const DetectorConfig> configs, const FrameLayout& layout,
                        const SampledPulse& pulse, std::span<const double> snr_grid_db) {
  CurveTable table(std::vector<double>(snr_grid_db.begin(), snr_grid_db.end()));
  for (const auto& config : configs) {
    std::vector<double> pd(snr_grid_db.size());
    for (std::size_t i = 0; i < snr_grid_db.size(); ++i) {
      pd[i] = pd_for(config, layout, pulse, db_to_linear(snr_grid_db[i])).value();
    }
    table.add_column(config.label + "_pd", std::move(pd));
  }
  table.set_metadata("source", "analytic");
  return table;
}

}  // namespace uwbfuse
