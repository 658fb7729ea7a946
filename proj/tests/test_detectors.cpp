#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "uwbfuse/detectors.hpp"

using namespace uwbfuse;

namespace {

const FrameLayout kLayout = FrameLayout::make(10e-9, 5e9);
const SampledPulse kPulse = gaussian2_pulse(3.33e-9, kLayout);

std::vector<DetectorKind> all_kinds() {
  return {DetectorKind::matched_filter(), DetectorKind::energy(),
          DetectorKind::amplitude(AmplitudeVariant::sum_of_abs), DetectorKind::amplitude(AmplitudeVariant::abs_of_sum),
          DetectorKind::amplitude(AmplitudeVariant::abs_of_aligned_sum)};
}

// Fraction of n H0 trials whose statistic exceeds the threshold.
double h0_fire_rate(const DetectorConfig& config, const NoiseModel& noise, const Threshold& th, std::uint64_t seed,
                    std::size_t n) {
  std::size_t fired = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto trial = synth_trial(kPulse, config.frame_budget, Hypothesis::h0, noise, seed, t);
    fired += to_bit(decide(test_statistic(config.kind, trial, kPulse, config.frame_budget), th));
  }
  return static_cast<double>(fired) / static_cast<double>(n);
}

}  // namespace

TEST(DetectorKind, NamesRoundTrip) {
  for (auto t : {DetectorType::matched_filter, DetectorType::energy, DetectorType::amplitude})
    EXPECT_EQ(parse_detector_type(to_string(t)), t);
  for (auto v : {AmplitudeVariant::sum_of_abs, AmplitudeVariant::abs_of_sum, AmplitudeVariant::abs_of_aligned_sum})
    EXPECT_EQ(parse_amplitude_variant(to_string(v)), v);
  EXPECT_FALSE(parse_detector_type("radar").has_value());
  EXPECT_FALSE(DetectorKind::energy().variant().has_value());
  EXPECT_TRUE(DetectorKind::amplitude(AmplitudeVariant::sum_of_abs).variant().has_value());
}

TEST(DetectorConfig, Validates) {
  EXPECT_THROW(DetectorConfig::make(DetectorKind::energy(), 0.0, 10, "x"), std::domain_error);
  EXPECT_THROW(DetectorConfig::make(DetectorKind::energy(), 1.0, 10, "x"), std::domain_error);
  EXPECT_THROW(DetectorConfig::make(DetectorKind::energy(), 0.1, 0, "x"), std::domain_error);
}

TEST(TestStatistic, ZeroInput) {
  TrialSamples zero{Hypothesis::h0, 5, 50, std::vector<double>(250, 0.0)};
  for (const auto& k : all_kinds()) EXPECT_EQ(test_statistic(k, zero, kPulse, 5), 0.0);
}

TEST(TestStatistic, NoiselessH1) {
  const auto noise = NoiseModel::make(1e-300, 50);
  const auto t100 = synth_trial(kPulse, 100, Hypothesis::h1, noise, 1, 0);
  EXPECT_NEAR(test_statistic(DetectorKind::matched_filter(), t100, kPulse, 100), 100.0, 1e-9);
  const auto t1000 = synth_trial(kPulse, 1000, Hypothesis::h1, noise, 1, 0);
  EXPECT_NEAR(test_statistic(DetectorKind::energy(), t1000, kPulse, 1000), 1000.0, 1e-9);
  const double alpha = alpha_coefficient(kPulse, AlphaMode::absolute_sum);
  EXPECT_NEAR(test_statistic(DetectorKind::amplitude(AmplitudeVariant::sum_of_abs), t100, kPulse, 100), 100 * alpha,
              1e-9);
  EXPECT_NEAR(test_statistic(DetectorKind::amplitude(AmplitudeVariant::abs_of_aligned_sum), t100, kPulse, 100),
              100 * alpha, 1e-9);
  EXPECT_NEAR(test_statistic(DetectorKind::amplitude(AmplitudeVariant::abs_of_sum), t100, kPulse, 100),
              100 * std::abs(alpha_coefficient(kPulse, AlphaMode::signed_sum)), 1e-9);
}

TEST(TestStatistic, UsesLeadingFramesOnly) {
  TrialSamples t{Hypothesis::h0, 3, 50, std::vector<double>(150, 0.0)};
  for (std::size_t i = 100; i < 150; ++i) t.samples[i] = 7.0;
  for (const auto& k : all_kinds()) EXPECT_EQ(test_statistic(k, t, kPulse, 2), 0.0);
  EXPECT_GT(test_statistic(DetectorKind::energy(), t, kPulse, 3), 0.0);
}

TEST(TestStatistic, FrameBudgetBeyondTrialThrows) {
  TrialSamples t{Hypothesis::h0, 3, 50, std::vector<double>(150, 0.0)};
  EXPECT_THROW(test_statistic(DetectorKind::energy(), t, kPulse, 4), std::domain_error);
  EXPECT_THROW(test_statistic(DetectorKind::energy(), t, kPulse, 0), std::domain_error);
}

TEST(Decide, Examples) {
  EXPECT_EQ(decide(5.0, Threshold{4.0}), Decision::h1);
  EXPECT_EQ(decide(4.0, Threshold{4.0}), Decision::h0);
  EXPECT_EQ(decide(-1.0, Threshold{0.0}), Decision::h0);
}

TEST(CalibrateAnalytic, MatchedFilterAtHalfIsZero) {
  const auto cfg = DetectorConfig::make(DetectorKind::matched_filter(), 0.5, 100, "MF");
  const auto th = calibrate_threshold(cfg, kLayout, NoiseModel::make(1.0, 50), kPulse, CalibrationMethod::analytic);
  EXPECT_NEAR(th.value, 0.0, 1e-12);
  EXPECT_EQ(th.calibration, CalibrationMethod::analytic);
  EXPECT_FALSE(th.empirical_trials.has_value());
}

TEST(CalibrateAnalytic, EnergyDefaultConfig) {
  const auto cfg = DetectorConfig::make(DetectorKind::energy(), 0.1, 1000, "ED");
  const auto th = calibrate_threshold(cfg, kLayout, NoiseModel::make(1.0, 50), kPulse, CalibrationMethod::analytic);
  const double q = oracle::bisect_decreasing(oracle::normal_tail_quadrature, 0.1, 0.0, 10.0);
  EXPECT_NEAR(th.value, 0.02 * (std::sqrt(100000.0) * q + 50000.0), 1e-9);
  EXPECT_NEAR(th.value, 1008.1, 0.05);
}

TEST(CalibrateAnalytic, EmpiricalFalseAlarmRates) {
  const auto noise = NoiseModel::make(1.0, 50);
  const std::size_t n = 4000;
  struct Case {
    DetectorKind kind;
    std::size_t frames;
  };
  const Case cases[] = {{DetectorKind::matched_filter(), 20},
                        {DetectorKind::energy(), 200},
                        {DetectorKind::amplitude(AmplitudeVariant::sum_of_abs), 20},
                        {DetectorKind::amplitude(AmplitudeVariant::abs_of_sum), 20},
                        {DetectorKind::amplitude(AmplitudeVariant::abs_of_aligned_sum), 20}};
  std::uint64_t seed = 100;
  for (const auto& c : cases) {
    for (double pfa : {0.05, 0.1}) {
      const auto cfg = DetectorConfig::make(c.kind, pfa, c.frames, "d");
      const auto th = calibrate_threshold(cfg, kLayout, noise, kPulse, CalibrationMethod::analytic);
      const double rate = h0_fire_rate(cfg, noise, th, ++seed, n);
      EXPECT_NEAR(rate, pfa, 3.5 * std::sqrt(pfa * (1 - pfa) / n)) << to_string(c.kind.type()) << " pfa=" << pfa;
    }
  }
}

TEST(CalibrateAnalytic, EnergyDefaultConfigFalseAlarmWithin3Sigma) {
  const auto cfg = DetectorConfig::make(DetectorKind::energy(), 0.1, 1000, "ED");
  const auto noise = NoiseModel::make(1.0, 50);
  const auto th = calibrate_threshold(cfg, kLayout, noise, kPulse, CalibrationMethod::analytic);
  EXPECT_NEAR(h0_fire_rate(cfg, noise, th, 77, 1000), 0.1, 0.03);
}

TEST(H0Statistics, MatchedFilterMoments) {
  const auto noise = NoiseModel::make(2.0, 50);
  const std::size_t ns = 100, n = 10000;
  double sum = 0, sum2 = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto trial = synth_trial(kPulse, ns, Hypothesis::h0, noise, 5, t);
    const double v = test_statistic(DetectorKind::matched_filter(), trial, kPulse, ns);
    sum += v;
    sum2 += v * v;
  }
  const double expected_var = ns * kPulse.energy() * 2.0 / 50;
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 4 * std::sqrt(expected_var / n));
  EXPECT_NEAR((sum2 / n - mean * mean) / expected_var, 1.0, 0.05);
}

TEST(H0Statistics, EnergyMean) {
  const auto noise = NoiseModel::make(3.0, 50);
  const std::size_t ns = 40, n = 5000;
  double sum = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto trial = synth_trial(kPulse, ns, Hypothesis::h0, noise, 6, t);
    sum += test_statistic(DetectorKind::energy(), trial, kPulse, ns);
  }
  EXPECT_NEAR(sum / n / (ns * 3.0), 1.0, 0.005);
}

TEST(Decide, MonotoneInThreshold) {
  const auto noise = NoiseModel::make(1.0, 50);
  std::vector<double> stats;
  for (std::size_t t = 0; t < 500; ++t) {
    const auto trial = synth_trial(kPulse, 10, Hypothesis::h0, noise, 8, t);
    stats.push_back(test_statistic(DetectorKind::matched_filter(), trial, kPulse, 10));
  }
  for (double v : stats) {
    int prev = 1;
    for (double g = -5.0; g <= 5.0; g += 0.05) {
      const int d = to_bit(decide(v, Threshold{g}));
      EXPECT_LE(d, prev);
      prev = d;
    }
  }
}

TEST(CalibrateEmpirical, EnergyCloseToAnalytic) {
  const auto cfg = DetectorConfig::make(DetectorKind::energy(), 0.1, 10, "ED");
  const auto noise = NoiseModel::make(1.0, 50);
  const auto analytic = calibrate_threshold(cfg, kLayout, noise, kPulse, CalibrationMethod::analytic);
  const auto empirical = calibrate_threshold(cfg, kLayout, noise, kPulse, CalibrationMethod::empirical, 20000, 3);
  EXPECT_EQ(empirical.calibration, CalibrationMethod::empirical);
  EXPECT_EQ(empirical.empirical_trials, 20000u);
  EXPECT_NEAR(empirical.value / analytic.value, 1.0, 0.01);
  // exact chi-square quantile at dof 500, scaled by the per-sample variance
  const double exact = oracle::bisect_decreasing([](double x) { return oracle::central_chisq_tail(x, 500); }, 0.1,
                                                 0.0, 2000.0);
  EXPECT_NEAR(empirical.value / (0.02 * exact), 1.0, 0.005);
}

TEST(CalibrateEmpirical, ScalesWithNoiseLevel) {
  for (const auto& kind : all_kinds()) {
    const auto cfg = DetectorConfig::make(kind, 0.1, 5, "d");
    const auto a = calibrate_threshold(cfg, kLayout, NoiseModel::make(1.0, 50), kPulse,
                                       CalibrationMethod::empirical, 1000, 9);
    const auto b = calibrate_threshold(cfg, kLayout, NoiseModel::make(4.0, 50), kPulse,
                                       CalibrationMethod::empirical, 1000, 9);
    EXPECT_NEAR(b.value / a.value, kind.homogeneity_degree() == 2 ? 4.0 : 2.0, 1e-12);
  }
}

TEST(CalibrateEmpirical, OrderStatisticRank) {
  // with pfa 0.5 over 200 trials the threshold is the 100th smallest statistic
  const auto cfg = DetectorConfig::make(DetectorKind::matched_filter(), 0.5, 2, "MF");
  const auto noise = NoiseModel::make(50.0, 50);
  const auto th = calibrate_threshold(cfg, kLayout, noise, kPulse, CalibrationMethod::empirical, 200, 4);
  std::size_t below_or_equal = 0;
  for (std::size_t t = 0; t < 200; ++t) {
    const auto trial = synth_trial(kPulse, 2, Hypothesis::h0, noise, 4, t);
    below_or_equal += test_statistic(cfg.kind, trial, kPulse, 2) <= th.value + 1e-12;
  }
  EXPECT_EQ(below_or_equal, 100u);
}

TEST(CalibrateEmpirical, TooFewTrialsIsCalibrationError) {
  const auto cfg = DetectorConfig::make(DetectorKind::matched_filter(), 1e-4, 10, "MF");
  EXPECT_THROW(calibrate_threshold(cfg, kLayout, NoiseModel::make(1.0, 50), kPulse, CalibrationMethod::empirical,
                                   100000 - 1, 1),
               CalibrationError);
}
