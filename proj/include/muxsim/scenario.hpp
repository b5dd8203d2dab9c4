#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "muxsim/mux_engine.hpp"

namespace muxsim {

inline constexpr int kSchemaVersion = 1;

/// Linear or logarithmic scan of one numeric field of the system.
///
/// `parameter` is a dotted path below "system", e.g. "sources.*.mu",
/// "signal_channels.0.eta" or "output_detector.dark_prob". A "*" segment
/// applies the value to every element of an array.
struct SweepSpec {
  std::string parameter;
  double from = 0.0;
  double to = 0.0;
  int steps = 1;
  bool log_scale = false;

  std::vector<double> values() const;

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct Scenario {
  int schema_version = kSchemaVersion;
  SystemConfig system;
  std::optional<SweepSpec> sweep;
  std::uint64_t seed = 1;
  std::string output;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses and validates a scenario. Throws ParseError carrying line:column for
/// malformed JSON and ConfigurationError naming the offending field otherwise.
Scenario parse_scenario(std::string_view text, std::string_view source_name = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

/// Fully explicit form: every default is written out.
nlohmann::ordered_json scenario_to_json(const Scenario& scenario);
nlohmann::ordered_json system_to_json(const SystemConfig& cfg);
SystemConfig system_from_json(const nlohmann::ordered_json& j);

/// Copy of `cfg` with the field at `path` set to `value`, re-validated.
SystemConfig apply_parameter(const SystemConfig& cfg, std::string_view path, double value);

}  // namespace muxsim
