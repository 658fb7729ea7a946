#pragma once

// Implementation of the command-line subcommands. Each returns the process
// exit status; typed errors (ConfigError, IoError) propagate to the caller,
// which maps them with exit_code_for().

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "uwbfuse/run_config.hpp"

namespace uwbfuse::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kConfigError = 2,
  kIoError = 3,
  kOutOfRange = 4,
  kInternalError = 5,
};

struct CommandOptions {
  std::optional<std::filesystem::path> config_path;  // absent: built-in default config
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  double target_pd = 0.95;
  std::size_t workers = 0;
  bool trial_log = false;
};

/// Config with --seed / --trials overrides applied.
RunConfig resolve_config(const CommandOptions& options);

/// --out, else the config's output_dir, else runs/<UTC timestamp>.
std::filesystem::path resolve_output_dir(const CommandOptions& options, const RunConfig& config);

/// Writes analytic_curves.csv.
int cmd_curves(const CommandOptions& options, std::ostream& log);

/// Writes empirical_curves.csv, fusion_curves.csv, run_meta, resolved_config.json
/// and, with trial_log set, trial_log.csv.
int cmd_simulate(const CommandOptions& options, std::ostream& log);

/// SNR at target P_D for each detector and rule, pairwise gains and P_E at the
/// crossings. Writes report.csv, gains.csv and report_flags. Reuses simulation
/// outputs in the output directory when their run_meta matches the config.
int cmd_report(const CommandOptions& options, std::ostream& log);

/// Writes pulse.csv (index,t_ns,amplitude) and prints both alpha coefficients.
int cmd_pulse(const CommandOptions& options, std::ostream& log);

int exit_code_for(const std::exception& error);

/// 64-bit FNV-1a of a byte string, printed in run_meta.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace uwbfuse::cli
