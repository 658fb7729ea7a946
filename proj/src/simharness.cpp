#include "uwbfuse/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <thread>

#include "uwbfuse/analytic.hpp"
#include "uwbfuse/rng.hpp"

namespace uwbfuse {

namespace {

// Stream-domain tags for derive_key.
constexpr std::uint64_t kTrialDomain = 0x7472;
constexpr std::uint64_t kCalibrationDomain = 0x63616c;
constexpr std::uint64_t kPilotDomain = 0x70696c;

struct GridPoint {
  double snr_db;
  double snr;
  NoiseModel noise;
};

std::vector<GridPoint> grid_points(const Scenario& scenario) {
  std::vector<GridPoint> points;
  points.reserve(scenario.snr_grid_db.size());
  for (const double db : scenario.snr_grid_db) {
    const double snr = db_to_linear(db);
    points.push_back({db, snr, NoiseModel::from_snr(snr, scenario.pulse.energy(), scenario.layout().samples_per_frame)});
  }
  return points;
}

std::vector<std::vector<Threshold>> calibrate_all(const Scenario& scenario, const std::vector<GridPoint>& grid) {
  const auto& layout = scenario.layout();
  std::vector<std::vector<Threshold>> thresholds(grid.size());

  if (scenario.calibration == CalibrationMethod::analytic) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      for (const auto& config : scenario.detectors) {
        thresholds[g].push_back(
            calibrate_threshold(config, layout, grid[g].noise, scenario.pulse, CalibrationMethod::analytic));
      }
    }
    return thresholds;
  }

  // Empirical: one calibration per detector at unit per-sample variance, then
  // rescaled by the statistic's homogeneity degree at each grid point.
  const std::size_t trials =
      scenario.calibration_trials > 0 ? scenario.calibration_trials : 10 * scenario.trials_per_hypothesis;
  const auto unit = NoiseModel::make(static_cast<double>(layout.samples_per_frame), layout.samples_per_frame);
  for (std::size_t d = 0; d < scenario.detectors.size(); ++d) {
    const auto& config = scenario.detectors[d];
    const auto key = rng::derive_key(scenario.seed, {kCalibrationDomain, d});
    const Threshold base =
        calibrate_threshold(config, layout, unit, scenario.pulse, CalibrationMethod::empirical, trials, key);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double sd = std::sqrt(grid[g].noise.per_sample_variance);
      Threshold scaled = base;
      scaled.value = base.value * std::pow(sd, config.kind.homogeneity_degree());
      thresholds[g].push_back(scaled);
    }
  }
  return thresholds;
}

// Fusion rules resolved at every grid point.
std::vector<std::vector<FusionRule>> resolve_rules(const Scenario& scenario, const std::vector<GridPoint>& grid,
                                                   const RunOptions& options) {
  const std::size_t detectors = scenario.detectors.size();
  std::vector<std::vector<FusionRule>> rules(grid.size());

  std::optional<EmpiricalReport> pilot;
  const bool needs_map = std::any_of(scenario.fusion_rules.begin(), scenario.fusion_rules.end(),
                                     [](const FusionRuleSpec& r) { return r.preset == RulePreset::map; });
  if (needs_map && scenario.operating_points == OperatingPointSource::empirical) {
    Scenario pilot_scenario = scenario;
    pilot_scenario.seed = rng::derive_key(scenario.seed, {kPilotDomain});
    pilot_scenario.fusion_rules.clear();
    pilot = run_detection_experiment(pilot_scenario, RunOptions{options.workers, false});
  }

  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (const auto& spec : scenario.fusion_rules) {
      if (spec.preset != RulePreset::map) {
        rules[g].push_back(spec.resolve_counting(detectors));
        continue;
      }
      std::vector<OperatingPoint> points;
      for (std::size_t d = 0; d < detectors; ++d) {
        const auto& config = scenario.detectors[d];
        if (pilot) {
          const double pd = pilot->per_detector.column(config.label + "_pd")[g];
          const double pfa = pilot->per_detector.column(config.label + "_pfa")[g];
          points.push_back({stats::Probability(pd), stats::Probability(pfa)});
        } else {
          points.push_back(operating_point(config, scenario.layout(), scenario.pulse, grid[g].snr));
        }
      }
      rules[g].push_back(FusionRule::map(std::move(points), spec.priors));
    }
  }
  return rules;
}

struct WorkerResult {
  // [hypothesis][grid][column]
  std::vector<std::vector<std::vector<std::size_t>>> detector_hits;
  std::vector<std::vector<std::vector<std::size_t>>> rule_hits;
};

class TrialRunner {
 public:
  TrialRunner(const Scenario& scenario, const std::vector<GridPoint>& grid,
              const std::vector<std::vector<Threshold>>& thresholds,
              const std::vector<std::vector<FusionRule>>& rules, DecisionLog* log)
      : scenario_(scenario), grid_(grid), thresholds_(thresholds), rules_(rules), log_(log) {}

  WorkerResult run(std::size_t first, std::size_t last) const {
    const std::size_t detectors = scenario_.detectors.size();
    const std::size_t rule_count = scenario_.fusion_rules.size();
    WorkerResult result;
    result.detector_hits.assign(2, std::vector<std::vector<std::size_t>>(grid_.size(), std::vector<std::size_t>(detectors)));
    result.rule_hits.assign(2, std::vector<std::vector<std::size_t>>(grid_.size(), std::vector<std::size_t>(rule_count)));

    const std::size_t n_fr = scenario_.layout().samples_per_frame;
    const std::size_t frames = scenario_.frames_per_trial();
    const bool shared = scenario_.noise_sharing == NoiseSharing::shared;
    const std::size_t streams = shared ? 1 : detectors;

    std::vector<std::vector<double>> unit(streams, std::vector<double>(frames * n_fr));
    TrialSamples trial;
    std::vector<Decision> decisions(detectors);

    for (const Hypothesis h : {Hypothesis::h0, Hypothesis::h1}) {
      const auto hyp = static_cast<std::size_t>(h);
      for (std::size_t t = first; t < last; ++t) {
        for (std::size_t s = 0; s < streams; ++s) {
          const std::size_t needed = shared ? frames : scenario_.detectors[s].frame_budget;
          const auto key = shared ? rng::derive_key(scenario_.seed, {kTrialDomain, hyp})
                                  : rng::derive_key(scenario_.seed, {kTrialDomain, hyp, s + 1});
          fill_unit_noise(std::span<double>(unit[s]).first(needed * n_fr), key, t);
        }
        for (std::size_t g = 0; g < grid_.size(); ++g) {
          for (std::size_t d = 0; d < detectors; ++d) {
            const auto& config = scenario_.detectors[d];
            if (shared) {
              if (d == 0) compose_trial(trial, scenario_.pulse, unit[0], frames, h, grid_[g].noise);
            } else {
              compose_trial(trial, scenario_.pulse, unit[d], config.frame_budget, h, grid_[g].noise);
            }
            const double statistic = test_statistic(config.kind, trial, scenario_.pulse, config.frame_budget);
            decisions[d] = decide(statistic, thresholds_[g][d]);
            result.detector_hits[hyp][g][d] += static_cast<std::size_t>(to_bit(decisions[d]));
          }
          for (std::size_t r = 0; r < rule_count; ++r) {
            result.rule_hits[hyp][g][r] += static_cast<std::size_t>(to_bit(fuse(decisions, rules_[g][r])));
          }
          if (log_ != nullptr) {
            auto slot = log_->mutable_vector(g, h, t);
            std::copy(decisions.begin(), decisions.end(), slot.begin());
          }
        }
      }
    }
    return result;
  }

 private:
  const Scenario& scenario_;
  const std::vector<GridPoint>& grid_;
  const std::vector<std::vector<Threshold>>& thresholds_;
  const std::vector<std::vector<FusionRule>>& rules_;
  DecisionLog* log_;
};

EmpiricalReport run_experiment(const Scenario& scenario, const RunOptions& options) {
  scenario.validate();
  const auto grid = grid_points(scenario);
  const auto thresholds = calibrate_all(scenario, grid);
  auto rules = resolve_rules(scenario, grid, options);

  const std::size_t trials = scenario.trials_per_hypothesis;
  const std::size_t detectors = scenario.detectors.size();
  const std::size_t rule_count = scenario.fusion_rules.size();

  std::optional<DecisionLog> log;
  if (options.keep_trial_log) log.emplace(grid.size(), trials, detectors);

  std::size_t workers = options.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.workers;
  workers = std::min(workers, trials);

  const TrialRunner runner(scenario, grid, thresholds, rules, log ? &*log : nullptr);
  std::vector<WorkerResult> partial(workers);
  if (workers == 1) {
    partial[0] = runner.run(0, trials);
  } else {
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t first = trials * w / workers;
      const std::size_t last = trials * (w + 1) / workers;
      pool.emplace_back([&, w, first, last] {
        try {
          partial[w] = runner.run(first, last);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  // Reduce in worker (= trial-range) order.
  HitCounts detector_hits{std::vector<std::vector<std::size_t>>(grid.size(), std::vector<std::size_t>(detectors)),
                          std::vector<std::vector<std::size_t>>(grid.size(), std::vector<std::size_t>(detectors))};
  HitCounts rule_hits{std::vector<std::vector<std::size_t>>(grid.size(), std::vector<std::size_t>(rule_count)),
                      std::vector<std::vector<std::size_t>>(grid.size(), std::vector<std::size_t>(rule_count))};
  for (const auto& p : partial) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      for (std::size_t d = 0; d < detectors; ++d) {
        detector_hits.h0[g][d] += p.detector_hits[0][g][d];
        detector_hits.h1[g][d] += p.detector_hits[1][g][d];
      }
      for (std::size_t r = 0; r < rule_count; ++r) {
        rule_hits.h0[g][r] += p.rule_hits[0][g][r];
        rule_hits.h1[g][r] += p.rule_hits[1][g][r];
      }
    }
  }

  const auto n = static_cast<double>(trials);
  EmpiricalReport report;
  report.per_detector = CurveTable(scenario.snr_grid_db);
  for (std::size_t d = 0; d < detectors; ++d) {
    std::vector<double> pd(grid.size()), pfa(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      pd[g] = static_cast<double>(detector_hits.h1[g][d]) / n;
      pfa[g] = static_cast<double>(detector_hits.h0[g][d]) / n;
    }
    report.per_detector.add_column(scenario.detectors[d].label + "_pd", std::move(pd));
    report.per_detector.add_column(scenario.detectors[d].label + "_pfa", std::move(pfa));
  }
  report.per_rule = CurveTable(scenario.snr_grid_db);
  for (std::size_t r = 0; r < rule_count; ++r) {
    std::vector<double> pd(grid.size()), pe(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const std::size_t misses = trials - rule_hits.h1[g][r];
      pd[g] = static_cast<double>(rule_hits.h1[g][r]) / n;
      pe[g] = static_cast<double>(misses + rule_hits.h0[g][r]) / (2.0 * n);
    }
    report.per_rule.add_column(scenario.fusion_rules[r].label + "_pd", std::move(pd));
    report.per_rule.add_column(scenario.fusion_rules[r].label + "_pe", std::move(pe));
  }
  for (auto* table : {&report.per_detector, &report.per_rule}) {
    table->set_metadata("source", "empirical");
    table->set_metadata("seed", std::to_string(scenario.seed));
    table->set_metadata("trials_per_hypothesis", std::to_string(trials));
  }
  report.detector_hits = std::move(detector_hits);
  report.rule_hits = std::move(rule_hits);
  report.thresholds = thresholds;
  report.resolved_rules = std::move(rules);
  report.trial_decisions = std::move(log);
  report.provenance = Provenance{scenario.seed, trials, scenario.description};
  return report;
}

}  // namespace

FusionRule FusionRuleSpec::resolve_counting(std::size_t detectors) const {
  switch (preset) {
    case RulePreset::and_rule: return FusionRule::and_rule(detectors);
    case RulePreset::or_rule: return FusionRule::or_rule(detectors);
    case RulePreset::majority: return FusionRule::majority(detectors);
    case RulePreset::counting: return FusionRule::counting(k, detectors);
    case RulePreset::map: break;
  }
  throw std::logic_error("resolve_counting called on a MAP rule");
}

std::size_t Scenario::frames_per_trial() const {
  std::size_t frames = 0;
  for (const auto& d : detectors) frames = std::max(frames, d.frame_budget);
  return frames;
}

void Scenario::validate() const {
  if (pulse.size() < 2) throw std::invalid_argument("scenario: pulse is not set");
  if (detectors.empty()) throw std::invalid_argument("scenario: at least one detector is required");
  std::set<std::string> labels;
  for (const auto& d : detectors) {
    if (d.label.empty()) throw std::invalid_argument("scenario: detector labels must be non-empty");
    if (!labels.insert(d.label).second) throw std::invalid_argument("scenario: duplicate detector label '" + d.label + "'");
  }
  std::set<std::string> rule_labels;
  for (const auto& r : fusion_rules) {
    if (r.label.empty()) throw std::invalid_argument("scenario: fusion rule labels must be non-empty");
    if (!rule_labels.insert(r.label).second) throw std::invalid_argument("scenario: duplicate fusion rule '" + r.label + "'");
    if (r.preset == RulePreset::counting && (r.k < 1 || r.k > detectors.size())) {
      throw std::invalid_argument("scenario: counting rule '" + r.label + "' needs 1 <= k <= " +
                                  std::to_string(detectors.size()));
    }
  }
  if (snr_grid_db.empty()) throw std::invalid_argument("scenario: empty SNR grid");
  for (std::size_t i = 1; i < snr_grid_db.size(); ++i) {
    if (!(snr_grid_db[i] > snr_grid_db[i - 1])) throw std::invalid_argument("scenario: SNR grid must be strictly increasing");
  }
  if (trials_per_hypothesis < 100) throw std::invalid_argument("scenario: trials_per_hypothesis must be >= 100");
}

DecisionLog::DecisionLog(std::size_t grid_points, std::size_t trials, std::size_t detectors)
    : grid_points_(grid_points), trials_(trials), detectors_(detectors),
      bits_(grid_points * 2 * trials * detectors, Decision::h0) {}

EmpiricalReport run_detection_experiment(const Scenario& scenario, const RunOptions& options) {
  Scenario detectors_only = scenario;
  detectors_only.fusion_rules.clear();
  return run_experiment(detectors_only, options);
}

EmpiricalReport run_fusion_experiment(const Scenario& scenario, const RunOptions& options) {
  if (scenario.fusion_rules.empty()) throw std::invalid_argument("fusion experiment: no fusion rules configured");
  return run_experiment(scenario, options);
}

void write_trial_log_csv(std::ostream& out, const EmpiricalReport& report, const Scenario& scenario) {
  if (!report.trial_decisions) throw std::invalid_argument("trial log was not recorded");
  const auto& log = *report.trial_decisions;
  out << "snr_db,trial_index,hypothesis";
  for (const auto& d : scenario.detectors) out << ',' << d.label;
  out << '\n';
  for (std::size_t g = 0; g < log.grid_points(); ++g) {
    for (const Hypothesis h : {Hypothesis::h0, Hypothesis::h1}) {
      for (std::size_t t = 0; t < log.trials(); ++t) {
        out << format_db(scenario.snr_grid_db[g]) << ',' << t << ',' << static_cast<int>(h);
        for (const Decision d : log.vector(g, h, t)) out << ',' << to_bit(d);
        out << '\n';
      }
    }
  }
}

std::vector<double> isotonic_nondecreasing(std::span<const double> values) {
  struct Block {
    double sum;
    std::size_t count;
    [[nodiscard]] double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  for (const double v : values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      const Block top = blocks.back();
      blocks.pop_back();
      blocks.back().sum += top.sum;
      blocks.back().count += top.count;
    }
  }
  std::vector<double> fitted;
  fitted.reserve(values.size());
  for (const auto& b : blocks) fitted.insert(fitted.end(), b.count, b.mean());
  return fitted;
}

double interpolate_at(std::span<const double> grid_db, std::span<const double> values, double snr_db) {
  if (grid_db.empty() || grid_db.size() != values.size()) throw std::invalid_argument("interpolate_at: bad series");
  if (snr_db <= grid_db.front()) return values.front();
  if (snr_db >= grid_db.back()) return values.back();
  const auto upper = std::upper_bound(grid_db.begin(), grid_db.end(), snr_db);
  const auto i = static_cast<std::size_t>(upper - grid_db.begin());
  const double w = (snr_db - grid_db[i - 1]) / (grid_db[i] - grid_db[i - 1]);
  return values[i - 1] + w * (values[i] - values[i - 1]);
}

double snr_at(double target_pd, const NamedCurve& curve, std::span<const double> grid_db) {
  if (curve.values.size() != grid_db.size() || grid_db.empty()) {
    throw std::invalid_argument("snr_at: curve '" + curve.name + "' does not match the grid");
  }
  const auto fitted = isotonic_nondecreasing(curve.values);
  if (fitted.front() > target_pd) {
    throw OutOfRangeError(curve.name, "curve '" + curve.name + "' already exceeds P_D=" + format_probability(target_pd) +
                                          " at the first grid point (" + format_db(grid_db.front()) + " dB)");
  }
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    if (fitted[i] >= target_pd) {
      if (i == 0) return grid_db[0];
      const double w = (target_pd - fitted[i - 1]) / (fitted[i] - fitted[i - 1]);
      return grid_db[i - 1] + w * (grid_db[i] - grid_db[i - 1]);
    }
  }
  throw OutOfRangeError(curve.name, "curve '" + curve.name + "' never reaches P_D=" + format_probability(target_pd) +
                                        " within the grid (max " + format_probability(fitted.back()) + " at " +
                                        format_db(grid_db.back()) + " dB)");
}

double snr_gain_at(double target_pd, const NamedCurve& curve_a, const NamedCurve& curve_b,
                   std::span<const double> grid_db) {
  return snr_at(target_pd, curve_a, grid_db) - snr_at(target_pd, curve_b, grid_db);
}

}  // namespace uwbfuse
