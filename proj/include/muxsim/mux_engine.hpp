#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "muxsim/components.hpp"
#include "muxsim/photon_stats.hpp"
#include "muxsim/random.hpp"

namespace muxsim {

/// Full description of an N-source multiplexed experiment.
struct SystemConfig {
  std::vector<PairNumberDistribution> sources;
  std::vector<ChannelSpec> signal_channels;
  std::vector<ChannelSpec> idler_channels;
  std::vector<DetectorSpec> herald_detectors;
  /// Balanced tree, see switch_count(). Empty for a single source.
  std::vector<SwitchSpec> switch_tree;
  /// Per-source route transmission replacing the tree product when set.
  std::optional<std::vector<double>> switch_path_override;
  RoutingPolicy routing;
  DetectorSpec output_detector;
  bool hbt_enabled = false;
  std::array<DetectorSpec, 2> hbt_detectors{};
  double repetition_period = 1e-8;  // seconds
  std::uint64_t pulses = 1'000'000;

  std::size_t source_count() const noexcept { return sources.size(); }

  /// N identical sources with ideal channels, detectors and switches.
  static SystemConfig uniform(std::size_t n_sources, const PairNumberDistribution& source);

  friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

/// Throws ConfigurationError naming the offending field.
void validate(const SystemConfig& cfg);

/// Route transmission of every source (override or tree product).
std::vector<double> switch_path_transmissions(const SystemConfig& cfg);

struct PulseOutcome {
  std::vector<int> pairs;
  std::vector<int> idlers;  // idler photons reaching the switch, per source
  std::vector<std::uint8_t> herald_click;
  int output_photons = 0;   // photons leaving the switch tree
  std::optional<std::size_t> selected;
  bool output_click = false;
  bool hbt_a_click = false;
  bool hbt_b_click = false;
};

/// Cross-pulse HBT counts at one offset n. Detector a is read at pulse k and
/// detector b at pulse k + n.
struct HbtTally {
  // Restricted to pulse pairs where both k and k + n heralded.
  std::uint64_t herald_norm = 0;
  std::uint64_t heralded_a = 0;
  std::uint64_t heralded_b = 0;
  std::uint64_t heralded_pairs_both = 0;
  // All pulse pairs.
  std::uint64_t pulse_norm = 0;
  std::uint64_t singles_a = 0;
  std::uint64_t singles_b = 0;
  std::uint64_t pairs_ab = 0;

  friend bool operator==(const HbtTally&, const HbtTally&) = default;
};

struct TallyCounters {
  std::uint64_t pulses = 0;
  std::uint64_t heralds = 0;         // pulses with at least one herald click
  std::uint64_t output_singles = 0;  // output detector clicks
  std::uint64_t coincidences = 0;    // herald and output click in the same pulse
  std::uint64_t accidentals = 0;     // herald at k, output click at k + 1
  std::vector<std::uint64_t> source_heralds;
  std::vector<std::uint64_t> source_selected;
  std::array<HbtTally, 3> hbt{};  // offsets -1, 0, +1

  TallyCounters() = default;
  explicit TallyCounters(std::size_t n_sources) : source_heralds(n_sources), source_selected(n_sources) {}

  HbtTally& hbt_at(int offset) { return hbt.at(static_cast<std::size_t>(offset + 1)); }
  const HbtTally& hbt_at(int offset) const { return hbt.at(static_cast<std::size_t>(offset + 1)); }

  friend bool operator==(const TallyCounters&, const TallyCounters&) = default;
};

/// Fieldwise sum. Throws InvalidParameterError if the per-source shapes differ.
TallyCounters merge_tallies(const TallyCounters& a, const TallyCounters& b);

/// Precomputed per-pulse sampler for one validated configuration.
///
/// Draw order per pulse, fixed for reproducibility: for each source in index
/// order (pair count, signal thinning, herald click, idler thinning); then
/// switch-path thinning of the selected idlers, output click, and when HBT is
/// enabled the 50/50 split followed by the a and b clicks.
class PulseSimulator {
public:
  explicit PulseSimulator(const SystemConfig& cfg);

  void simulate(RandomStream& rng, PulseOutcome& out) const;
  PulseOutcome simulate(RandomStream& rng) const;

  std::size_t source_count() const noexcept { return samplers_.size(); }
  const SystemConfig& config() const noexcept { return cfg_; }

private:
  SystemConfig cfg_;
  std::vector<PairCountSampler> samplers_;
  std::vector<double> path_transmission_;
};

PulseOutcome simulate_pulse(const SystemConfig& cfg, RandomStream& rng);

/// Pulses are cut into fixed chunks; chunk c draws from RandomStream(seed, c).
/// Tallies therefore do not depend on the worker count.
inline constexpr std::uint64_t kPulsesPerChunk = std::uint64_t{1} << 16;

/// Simulates cfg.pulses pulses. Workers own contiguous chunk ranges and
/// regenerate the first pulse of the following chunk to close their last
/// cross-pulse pairing, so no pairing is dropped at block boundaries and the
/// result is bit-identical for any `threads`.
TallyCounters run_experiment(const SystemConfig& cfg, std::uint64_t seed, unsigned threads = 1);

}  // namespace muxsim
