#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "muxsim/photon_stats.hpp"
#include "muxsim/random.hpp"

namespace muxsim {

/// Threshold (non-photon-number-resolving) detector. Dark counts are i.i.d.
/// per pulse gate; no dead time or after-pulsing.
struct DetectorSpec {
  double efficiency = 1.0;
  double dark_prob = 0.0;

  friend bool operator==(const DetectorSpec&, const DetectorSpec&) = default;
};

/// Lumped transmission of a photon path, excluding detector efficiency.
struct ChannelSpec {
  double transmission = 1.0;

  friend bool operator==(const ChannelSpec&, const ChannelSpec&) = default;
};

/// 2x1 (or wider) routing switch; one transmission per input port.
struct SwitchSpec {
  std::vector<double> input_transmissions{1.0, 1.0};

  friend bool operator==(const SwitchSpec&, const SwitchSpec&) = default;
};

enum class RoutingKind { PriorityOrder };

/// Feed-forward arbitration: the first heralding source in `order` wins.
struct RoutingPolicy {
  RoutingKind kind = RoutingKind::PriorityOrder;
  std::vector<std::size_t> order;

  static RoutingPolicy priority(std::size_t n_sources);

  friend bool operator==(const RoutingPolicy&, const RoutingPolicy&) = default;
};

void validate(const DetectorSpec& det);
void validate(const ChannelSpec& channel);
void validate(const SwitchSpec& sw);
/// `n_sources` is the expected permutation size.
void validate(const RoutingPolicy& policy, std::size_t n_sources);

/// Click with probability 1 - (1 - dark_prob)(1 - efficiency)^n_incident.
/// Consumes exactly one uniform draw.
bool click_sample(int n_incident, const DetectorSpec& det, RandomStream& rng);

/// 1 - (1 - dark_prob) * sum_n P(n) (1 - efficiency)^n
template <typename Derived>
typename Derived::Scalar click_probability(const Eigen::MatrixBase<Derived>& pmf, const DetectorSpec& det) {
  using Scalar = typename Derived::Scalar;
  const Scalar no_dark = Scalar(1) - static_cast<Scalar>(det.dark_prob);
  return Scalar(1) - no_dark * pgf(pmf, Scalar(1) - static_cast<Scalar>(det.efficiency));
}

/// Index of the first heralding source in policy order; nullopt if none heralded.
std::optional<std::size_t> route_select(std::span<const std::uint8_t> herald_flags, const RoutingPolicy& policy);

/// Depth of a balanced binary switch tree: ceil(log2 n_sources), 0 for one source.
int switch_stages(std::size_t n_sources);

/// Switch count of the full tree, 2^stages - 1, listed stage by stage from the
/// source side. Stage s holds 2^(stages - s - 1) switches; source k enters
/// switch (k >> (s + 1)) of stage s on input port (k >> s) & 1.
std::size_t switch_count(std::size_t n_sources);

/// Product of per-stage input transmissions along source `source`'s route.
double switch_path_transmission(std::span<const SwitchSpec> tree, std::size_t n_sources, std::size_t source);

}  // namespace muxsim
