#include "muxsim/components.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace muxsim {

namespace {

void require_probability(double value, std::string_view name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw InvalidParameterError(fmt::format("{} must lie in [0, 1], got {}", name, value));
  }
}

}  // namespace

RoutingPolicy RoutingPolicy::priority(std::size_t n_sources) {
  RoutingPolicy policy;
  policy.order.resize(n_sources);
  for (std::size_t k = 0; k < n_sources; ++k) policy.order[k] = k;
  return policy;
}

void validate(const DetectorSpec& det) {
  require_probability(det.efficiency, "efficiency");
  require_probability(det.dark_prob, "dark_prob");
  if (det.dark_prob >= 1.0) throw InvalidParameterError("dark_prob must be < 1");
}

void validate(const ChannelSpec& channel) { require_probability(channel.transmission, "eta"); }

void validate(const SwitchSpec& sw) {
  if (sw.input_transmissions.size() < 2) {
    throw InvalidParameterError("a switch needs at least two input transmissions");
  }
  for (double t : sw.input_transmissions) require_probability(t, "input_transmissions");
}

void validate(const RoutingPolicy& policy, std::size_t n_sources) {
  if (policy.order.size() != n_sources) {
    throw InvalidParameterError(
        fmt::format("routing order has {} entries for {} sources", policy.order.size(), n_sources));
  }
  std::vector<bool> seen(n_sources, false);
  for (std::size_t k : policy.order) {
    if (k >= n_sources || seen[k]) {
      throw InvalidParameterError("routing order must be a permutation of source indices");
    }
    seen[k] = true;
  }
}

bool click_sample(int n_incident, const DetectorSpec& det, RandomStream& rng) {
  const double silent = (1.0 - det.dark_prob) * std::pow(1.0 - det.efficiency, n_incident);
  return rng.uniform() >= silent;
}

std::optional<std::size_t> route_select(std::span<const std::uint8_t> herald_flags, const RoutingPolicy& policy) {
  if (herald_flags.size() != policy.order.size()) {
    throw InvalidParameterError(fmt::format("{} herald flags for a policy over {} sources",
                                            herald_flags.size(), policy.order.size()));
  }
  for (std::size_t k : policy.order) {
    if (herald_flags[k]) return k;
  }
  return std::nullopt;
}

int switch_stages(std::size_t n_sources) {
  int stages = 0;
  while ((std::size_t{1} << stages) < n_sources) ++stages;
  return stages;
}

std::size_t switch_count(std::size_t n_sources) {
  return (std::size_t{1} << switch_stages(n_sources)) - 1;
}

double switch_path_transmission(std::span<const SwitchSpec> tree, std::size_t n_sources, std::size_t source) {
  if (source >= n_sources) throw InvalidParameterError("source index out of range");
  if (tree.size() != switch_count(n_sources)) {
    throw InvalidParameterError(fmt::format("switch tree for {} sources needs {} switches, got {}", n_sources,
                                            switch_count(n_sources), tree.size()));
  }
  const int stages = switch_stages(n_sources);
  double transmission = 1.0;
  std::size_t stage_offset = 0;
  for (int s = 0; s < stages; ++s) {
    const SwitchSpec& sw = tree[stage_offset + (source >> (s + 1))];
    transmission *= sw.input_transmissions.at((source >> s) & 1U);
    stage_offset += std::size_t{1} << (stages - s - 1);
  }
  return transmission;
}

}  // namespace muxsim
