// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "oracles.hpp"
#include "uwbfuse/analytic.hpp"
#include "uwbfuse/commands.hpp"
#include "uwbfuse/fusion.hpp"
#include "uwbfuse/run_config.hpp"
#include "uwbfuse/simharness.hpp"
#include "uwbfuse/statkernels.hpp"

using namespace uwbfuse;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void info(const std::string& text) {
  std::printf("      %s\n", text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct CurveCheck {
  std::size_t points = 0;
  std::size_t violations = 0;
  double worst_z = 0.0;
};

// Empirical vs analytic at every grid point with analytic pd in [0.05, 0.95],
// tolerance 3 sqrt(p(1-p)/n).
CurveCheck compare_curve(std::span<const double> empirical, std::span<const double> analytic, double n) {
  CurveCheck c;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double p = analytic[i];
    if (p < 0.05 || p > 0.95) continue;
    const double z = std::abs(empirical[i] - p) / std::sqrt(p * (1 - p) / n);
    ++c.points;
    c.violations += z > 3.0;
    c.worst_z = std::max(c.worst_z, z);
  }
  return c;
}

std::vector<double> analytic_column(const DetectorConfig& config, const Scenario& s) {
  std::vector<double> out;
  for (double db : s.snr_grid_db) out.push_back(pd_for(config, s.layout(), s.pulse, db_to_linear(db)).value());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();

  const RunConfig config = RunConfig::reproduction_default();
  const Scenario scenario = config.to_scenario();
  const double n = static_cast<double>(scenario.trials_per_hypothesis);
  std::printf("reproduction scenario: seed %llu, %zu trials/hypothesis, %zu grid points\n",
              static_cast<unsigned long long>(scenario.seed), scenario.trials_per_hypothesis,
              scenario.snr_grid_db.size());

  const auto t0 = clock::now();
  const EmpiricalReport report = run_fusion_experiment(scenario, RunOptions{0, true});
  const double run_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  std::printf("fusion experiment: %.1f s\n", run_seconds);

  // 1. Per-detector empirical curves track the analytic curves.
  {
    bool pass = true;
    std::string detail;
    for (const auto& d : scenario.detectors) {
      const auto analytic = analytic_column(d, scenario);
      const auto c = compare_curve(report.per_detector.column(d.label + "_pd"), analytic, n);
      pass = pass && c.violations == 0 && c.points > 0;
      detail += d.label + " " + std::to_string(c.points - c.violations) + "/" + std::to_string(c.points) +
                " points (max " + fmt("%.2f", c.worst_z) + " sd); ";
    }
    verdict(1, "empirical Pd within 3 binomial sd of analytic curves", pass, detail + fmt("run %.0f s", run_seconds));
  }

  // 2. False-alarm rates: ED at its configured pfa, MF and AD at an inflated pfa of 0.05.
  {
    const double ed_pfa = report.per_detector.column("ED_pfa")[0];
    bool pass = ed_pfa >= 0.07 && ed_pfa <= 0.13;
    std::string detail = "ED pfa=0.1 -> " + fmt("%.3f", ed_pfa);

    Scenario inflated = scenario;
    inflated.detectors.clear();
    for (const auto& d : scenario.detectors) {
      if (d.kind.type() == DetectorType::energy) continue;
      inflated.detectors.push_back(DetectorConfig::make(d.kind, 0.05, d.frame_budget, d.label));
    }
    inflated.snr_grid_db = {scenario.snr_grid_db.front()};
    const auto check = run_detection_experiment(inflated, RunOptions{0, false});
    for (const auto& d : inflated.detectors) {
      const double pfa = check.per_detector.column(d.label + "_pfa")[0];
      pass = pass && std::abs(pfa - 0.05) <= 0.02;
      detail += "; " + d.label + " pfa=0.05 -> " + fmt("%.3f", pfa);
    }
    verdict(2, "false-alarm calibration", pass, detail + " (1000 H0 trials each)");
  }

  // 3. SNR gain of MAP fusion over ED alone at Pd = 0.95.
  {
    const auto& grid = scenario.snr_grid_db;
    bool pass = false;
    std::string detail;
    try {
      const auto& ed = report.per_detector.column("ED_pd");
      const auto& map_pd = report.per_rule.column("map_pd");
      const auto& map_pe = report.per_rule.column("map_pe");
      const double gain = snr_gain_at(0.95, {"ED", ed}, {"map", map_pd}, grid);
      const double map_snr = snr_at(0.95, {"map", map_pd}, grid);
      const double pe = interpolate_at(grid, map_pe, map_snr);
      pass = gain >= 3.0 && gain <= 5.0 && pe < 0.05;
      detail = "ED-vs-MAP gain " + fmt("%.3f dB", gain) + " (want [3, 5]); MAP Pe at " + fmt("%.2f dB", map_snr) +
               " = " + fmt("%.4f", pe) + " (want < 0.05)";
    } catch (const OutOfRangeError& e) {
      detail = std::string("crossing out of range: ") + e.what();
    }
    verdict(3, "fused SNR gain at Pd=0.95", pass, detail);
  }

  // 4. Fusion ordering: per-trial set inclusion and MAP error no worse than OR.
  {
    const auto& log = *report.trial_decisions;
    std::size_t inclusion_violations = 0;
    std::size_t count_violations = 0;
    std::size_t pe_violations = 0;
    double worst_margin = -1.0;
    const auto& or_pd = report.per_rule.column("or_pd");
    const auto& maj_pd = report.per_rule.column("majority_pd");
    const auto& and_pd = report.per_rule.column("and_pd");
    const auto& or_pe = report.per_rule.column("or_pe");
    const auto& map_pe = report.per_rule.column("map_pe");
    for (std::size_t g = 0; g < scenario.snr_grid_db.size(); ++g) {
      const auto& rules = report.resolved_rules[g];
      for (const Hypothesis h : {Hypothesis::h0, Hypothesis::h1}) {
        for (std::size_t t = 0; t < log.trials(); ++t) {
          const auto d = log.vector(g, h, t);
          const int o = to_bit(fuse(d, rules[0]));
          const int a = to_bit(fuse(d, rules[1]));
          const int m = to_bit(fuse(d, rules[2]));
          inclusion_violations += !(o >= m && m >= a);
        }
      }
      count_violations += !(or_pd[g] >= maj_pd[g] && maj_pd[g] >= and_pd[g]);
      const double pm = 1.0 - or_pd[g];
      const double pf = 2.0 * or_pe[g] - pm;
      const double se = std::sqrt(0.25 * (pm * (1 - pm) / n + pf * (1 - pf) / n));
      const double margin = map_pe[g] - (or_pe[g] + 2.0 * se);
      pe_violations += margin > 0.0;
      worst_margin = std::max(worst_margin, margin);
    }
    const bool pass = inclusion_violations == 0 && count_violations == 0 && pe_violations == 0;
    verdict(4, "fusion ordering", pass,
            "per-trial OR>=MAJ>=AND violations " + std::to_string(inclusion_violations) + ", grid-level " +
                std::to_string(count_violations) + "; Pe(MAP) > Pe(OR)+2se at " + std::to_string(pe_violations) +
                " points (largest Pe(MAP)-Pe(OR)-2se " + fmt("%.4f", worst_margin) + ")");
  }

  // 5. Special-function oracle suite.
  {
    const auto s0 = clock::now();
    double worst_roundtrip = 0.0;
    for (int i = -6000; i <= 6000; ++i) {
      const double x = i / 1000.0;
      worst_roundtrip = std::max(worst_roundtrip, std::abs(stats::normal_tail_inv(stats::normal_tail(x)) - x));
    }
    double worst_mixture = 0.0;
    double worst_central = 0.0;
    for (double dof : {1.0, 10.0, 50.0, 500.0}) {
      for (double lambda : {0.0, 1.0, 10.0, 100.0}) {
        const auto params = stats::NoncentralChiSq::make(dof, lambda);
        const double sd = std::sqrt(params.variance());
        for (double z = -3.0; z <= 8.0; z += 0.5) {
          const double x = params.mean() + z * sd;
          if (x <= 0.0) continue;
          const double ref = oracle::noncentral_chisq_tail_mixture(x, dof, lambda);
          const double got = stats::noncentral_chisq_tail(x, params);
          worst_mixture = std::max(worst_mixture, std::abs(got / ref - 1.0));
          if (lambda == 0.0) worst_central = std::max(worst_central, std::abs(got - oracle::central_chisq_tail(x, dof)));
        }
      }
    }
    const double seconds = std::chrono::duration<double>(clock::now() - s0).count();
    const bool pass = worst_roundtrip <= 1e-9 && worst_mixture <= 1e-8 && worst_central <= 1e-10;
    char detail[256];
    std::snprintf(detail, sizeof detail,
                  "Q round-trip max %.2e (<=1e-9); noncentral vs mixture max rel %.2e (<=1e-8); central max abs "
                  "%.2e (<=1e-10); %.2f s",
                  worst_roundtrip, worst_mixture, worst_central, seconds);
    verdict(5, "special-function oracles", pass, detail);
  }

  // 6. MAP equals counting for identical detectors, exhaustively over 2^3 vectors.
  {
    const OperatingPoint op{stats::Probability(0.9), stats::Probability(0.1)};
    const auto rule = FusionRule::map({op, op, op});
    std::size_t k = 0;
    for (std::size_t j = 0; j <= 3; ++j) {
      const double llr = j * std::log(0.9 / 0.1) + (3.0 - j) * std::log(0.1 / 0.9);
      if (llr > 0.0) {
        k = j;
        break;
      }
    }
    std::size_t agree = 0;
    for (unsigned mask = 0; mask < 8; ++mask) {
      std::vector<Decision> d(3);
      for (int i = 0; i < 3; ++i) d[i] = (mask >> i) & 1u ? Decision::h1 : Decision::h0;
      agree += map_fuse(d, rule) == counting_fuse(d, k);
    }
    verdict(6, "MAP equals counting rule", agree == 8 && k >= 1,
            "LLR sign change at k=" + std::to_string(k) + ", agreement on " + std::to_string(agree) + "/8 vectors");
  }

  // 7. Pulse coefficient resolution and amplitude-detector variant.
  {
    const double a_abs = alpha_coefficient(scenario.pulse, AlphaMode::absolute_sum);
    const double a_signed = alpha_coefficient(scenario.pulse, AlphaMode::signed_sum);
    const bool abs_match = std::abs(a_abs - 4.49) <= 0.02 * 4.49;
    const bool signed_match = std::abs(a_signed - 4.49) <= 0.02 * 4.49;
    const auto& ad = scenario.detectors[2];
    const auto adopted =
        compare_curve(report.per_detector.column(ad.label + "_pd"), analytic_column(ad, scenario), n);
    const bool pass = (abs_match != signed_match) && adopted.points > 0 && adopted.violations == 0;
    verdict(7, "alpha resolution", pass,
            "absolute " + fmt("%.4f", a_abs) + ", signed " + fmt("%.3g", a_signed) + " -> " +
                (abs_match ? "absolute" : signed_match ? "signed" : "neither") + " mode; adopted variant " +
                std::string(to_string(*ad.kind.variant())) + " matches at " +
                std::to_string(adopted.points - adopted.violations) + "/" + std::to_string(adopted.points) +
                " points (max " + fmt("%.2f", adopted.worst_z) + " sd)");

    // The two other variants against the same analytic curve, for the record.
    Scenario variants = scenario;
    variants.detectors = {
        DetectorConfig::make(DetectorKind::amplitude(AmplitudeVariant::sum_of_abs), ad.pfa.value(), ad.frame_budget,
                             "sum_of_abs"),
        DetectorConfig::make(DetectorKind::amplitude(AmplitudeVariant::abs_of_sum), ad.pfa.value(), ad.frame_budget,
                             "abs_of_sum")};
    const auto other = run_detection_experiment(variants, RunOptions{0, false});
    const auto analytic = analytic_column(ad, scenario);
    for (const auto& d : variants.detectors) {
      const auto c = compare_curve(other.per_detector.column(d.label + "_pd"), analytic, n);
      info(d.label + " vs the same curve: " + std::to_string(c.points - c.violations) + "/" + std::to_string(c.points) +
           " points within tolerance (max " + fmt("%.1f", c.worst_z) + " sd)");
    }
  }

  // 8. simulate is hash-stable across runs and worker counts.
  {
    const auto dir = fs::temp_directory_path() / ("uwbfuse_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    std::ostringstream sink;
    const std::size_t many = std::max<std::size_t>(4, std::thread::hardware_concurrency());
    const std::pair<const char*, std::size_t> runs[] = {{"run1", 1}, {"run2", 1}, {"runN", many}};
    for (const auto& [name, workers] : runs) {
      cli::CommandOptions opts;
      opts.out_dir = dir / name;
      opts.workers = workers;
      cli::cmd_simulate(opts, sink);
    }
    bool pass = true;
    std::string detail;
    for (const char* file : {"empirical_curves.csv", "fusion_curves.csv"}) {
      const auto h1 = cli::fnv1a(slurp(dir / "run1" / file));
      const auto h2 = cli::fnv1a(slurp(dir / "run2" / file));
      const auto hn = cli::fnv1a(slurp(dir / "runN" / file));
      pass = pass && h1 == h2 && h1 == hn;
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s %016llx/%016llx/%016llx; ", file, static_cast<unsigned long long>(h1),
                    static_cast<unsigned long long>(h2), static_cast<unsigned long long>(hn));
      detail += buf;
    }
    fs::remove_all(dir);
    verdict(8, "deterministic simulate", pass, detail + "1, 1 and " + std::to_string(many) + " workers");
  }

  const double total = std::chrono::duration<double>(clock::now() - started).count();
  std::printf("%d of 8 criteria failed; %.0f s total\n", failures, total);
  return failures == 0 ? 0 : 1;
}
