// uwbfuse: analytic curves, Monte Carlo detection/fusion runs and reports.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "uwbfuse/commands.hpp"

namespace {

void add_common(CLI::App* sub, uwbfuse::cli::CommandOptions& opts, std::string& config, std::string& out) {
  sub->add_option("--config", config, "JSON run config (default: built-in reproduction config)");
  sub->add_option("--out", out, "output directory");
  sub->add_option("--seed", opts.seed, "override the config seed");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace uwbfuse::cli;
  CLI::App app{"IR-UWB detection and decision-fusion workbench"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string config;
  std::string out;

  auto* curves = app.add_subcommand("curves", "analytic P_D versus SNR for each configured detector");
  add_common(curves, opts, config, out);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo detector and fusion curves");
  add_common(simulate, opts, config, out);
  simulate->add_option("--trials", opts.trials, "trials per hypothesis")->check(CLI::Range(100, 100000000));
  simulate->add_option("--workers", opts.workers, "worker threads (0 = all cores)");
  simulate->add_flag("--trial-log", opts.trial_log, "also write per-trial decisions");

  auto* report = app.add_subcommand("report", "SNR at target P_D, pairwise gains and fused P_E");
  add_common(report, opts, config, out);
  report->add_option("--trials", opts.trials, "trials per hypothesis")->check(CLI::Range(100, 100000000));
  report->add_option("--target-pd", opts.target_pd, "target detection probability")
      ->check(CLI::Range(0.0, 1.0));
  report->add_option("--workers", opts.workers, "worker threads (0 = all cores)");

  auto* pulse = app.add_subcommand("pulse", "sampled pulse and its alpha coefficients");
  add_common(pulse, opts, config, out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsageError;
  }
  if (!config.empty()) opts.config_path = config;
  if (!out.empty()) opts.out_dir = out;

  try {
    if (curves->parsed()) return cmd_curves(opts, std::cout);
    if (simulate->parsed()) return cmd_simulate(opts, std::cout);
    if (report->parsed()) return cmd_report(opts, std::cout);
    if (pulse->parsed()) return cmd_pulse(opts, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kUsageError;
}
