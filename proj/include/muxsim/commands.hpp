#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "muxsim/error.hpp"
#include "muxsim/scenario.hpp"

namespace muxsim::cli {

struct CommandOptions {
  std::optional<std::filesystem::path> scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> pulses;
  std::optional<std::filesystem::path> out;
  unsigned threads = 0;  // 0: hardware concurrency
  bool analytic_only = false;
  bool hbt = false;
  std::optional<double> target_car;  // run: fixed-CAR enhancement

  // scaling
  double stage_transmission = 0.85;
  double herald_prob = 0.0;
  std::size_t max_sources = 8;

  // fit
  std::optional<std::filesystem::path> data;
};

struct CommandResult {
  std::vector<std::filesystem::path> files;  // CSV first, then the JSON sidecar
  std::vector<std::string> warnings;
};

/// Column order of each CSV product. Stable; documented in --help.
std::span<const std::string_view> run_columns();
std::span<const std::string_view> sweep_columns();
std::span<const std::string_view> scaling_columns();
std::span<const std::string_view> fit_columns();

/// Scenario after CLI overrides (seed, pulses, --hbt).
Scenario effective_scenario(const CommandOptions& opts);

// Each command writes CSV to opts.out (else the scenario's output path, else
// `console`) and, when writing a file, a JSON sidecar next to it.
CommandResult cmd_run(const CommandOptions& opts, std::ostream& console);
CommandResult cmd_sweep(const CommandOptions& opts, std::ostream& console);
CommandResult cmd_scaling(const CommandOptions& opts, std::ostream& console);
CommandResult cmd_fit(const CommandOptions& opts, std::ostream& console);

/// Process exit status for an error category; 0 is success, 1 internal.
int exit_status(ErrorCategory category) noexcept;

/// The sidecar written next to `csv_path`.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

}  // namespace muxsim::cli
