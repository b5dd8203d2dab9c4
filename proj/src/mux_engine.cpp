#include "muxsim/mux_engine.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>

namespace muxsim {

namespace {

template <typename T>
void validate_field(const T& value, const std::string& path) {
  try {
    validate(value);
  } catch (const InvalidParameterError& e) {
    throw ConfigurationError(fmt::format("{}.{}", path, e.what()));
  }
}

template <typename T>
void validate_per_source(const std::vector<T>& list, std::size_t n, std::string_view name) {
  if (list.size() != n) {
    throw ConfigurationError(fmt::format("{} has {} entries, expected one per source ({})", name, list.size(), n));
  }
  for (std::size_t k = 0; k < n; ++k) validate_field(list[k], fmt::format("{}[{}]", name, k));
}

}  // namespace

SystemConfig SystemConfig::uniform(std::size_t n_sources, const PairNumberDistribution& source) {
  SystemConfig cfg;
  cfg.sources.assign(n_sources, source);
  cfg.signal_channels.assign(n_sources, ChannelSpec{});
  cfg.idler_channels.assign(n_sources, ChannelSpec{});
  cfg.herald_detectors.assign(n_sources, DetectorSpec{});
  cfg.switch_tree.assign(switch_count(n_sources), SwitchSpec{});
  cfg.routing = RoutingPolicy::priority(n_sources);
  return cfg;
}

void validate(const SystemConfig& cfg) {
  const std::size_t n = cfg.sources.size();
  if (n == 0) throw ConfigurationError("sources must list at least one source");
  for (std::size_t k = 0; k < n; ++k) {
    try {
      validate(cfg.sources[k]);
    } catch (const InvalidParameterError& e) {
      throw ConfigurationError(fmt::format("sources[{}]: {}", k, e.what()));
    }
  }
  validate_per_source(cfg.signal_channels, n, "signal_channels");
  validate_per_source(cfg.idler_channels, n, "idler_channels");
  validate_per_source(cfg.herald_detectors, n, "herald_detectors");
  if (cfg.switch_tree.size() != switch_count(n)) {
    throw ConfigurationError(fmt::format("switch_tree has {} switches; {} sources need {} ({} stages)",
                                         cfg.switch_tree.size(), n, switch_count(n), switch_stages(n)));
  }
  for (std::size_t s = 0; s < cfg.switch_tree.size(); ++s) {
    validate_field(cfg.switch_tree[s], fmt::format("switch_tree[{}]", s));
  }
  if (cfg.switch_path_override) {
    if (cfg.switch_path_override->size() != n) {
      throw ConfigurationError("switch_path_override needs one transmission per source");
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double t = (*cfg.switch_path_override)[k];
      if (!(t >= 0.0 && t <= 1.0)) {
        throw ConfigurationError(fmt::format("switch_path_override[{}] must lie in [0, 1], got {}", k, t));
      }
    }
  }
  try {
    validate(cfg.routing, n);
  } catch (const InvalidParameterError& e) {
    throw ConfigurationError(fmt::format("routing: {}", e.what()));
  }
  validate_field(cfg.output_detector, "output_detector");
  validate_field(cfg.hbt_detectors[0], "hbt_detectors[0]");
  validate_field(cfg.hbt_detectors[1], "hbt_detectors[1]");
  if (!(cfg.repetition_period > 0.0) || !std::isfinite(cfg.repetition_period)) {
    throw ConfigurationError(fmt::format("repetition_period must be > 0, got {}", cfg.repetition_period));
  }
  if (cfg.pulses < 1) throw ConfigurationError("pulses must be >= 1");
}

std::vector<double> switch_path_transmissions(const SystemConfig& cfg) {
  const std::size_t n = cfg.sources.size();
  if (cfg.switch_path_override) return *cfg.switch_path_override;
  std::vector<double> paths(n);
  for (std::size_t k = 0; k < n; ++k) paths[k] = switch_path_transmission(cfg.switch_tree, n, k);
  return paths;
}

TallyCounters merge_tallies(const TallyCounters& a, const TallyCounters& b) {
  if (a.source_heralds.size() != b.source_heralds.size() || a.source_selected.size() != b.source_selected.size()) {
    throw InvalidParameterError("cannot merge tallies from configurations with different source counts");
  }
  TallyCounters sum = a;
  sum.pulses += b.pulses;
  sum.heralds += b.heralds;
  sum.output_singles += b.output_singles;
  sum.coincidences += b.coincidences;
  sum.accidentals += b.accidentals;
  for (std::size_t k = 0; k < sum.source_heralds.size(); ++k) {
    sum.source_heralds[k] += b.source_heralds[k];
    sum.source_selected[k] += b.source_selected[k];
  }
  for (std::size_t i = 0; i < sum.hbt.size(); ++i) {
    HbtTally& s = sum.hbt[i];
    const HbtTally& o = b.hbt[i];
    s.herald_norm += o.herald_norm;
    s.heralded_a += o.heralded_a;
    s.heralded_b += o.heralded_b;
    s.heralded_pairs_both += o.heralded_pairs_both;
    s.pulse_norm += o.pulse_norm;
    s.singles_a += o.singles_a;
    s.singles_b += o.singles_b;
    s.pairs_ab += o.pairs_ab;
  }
  return sum;
}

PulseSimulator::PulseSimulator(const SystemConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  samplers_.reserve(cfg_.sources.size());
  for (const auto& source : cfg_.sources) samplers_.emplace_back(source);
  path_transmission_ = switch_path_transmissions(cfg_);
}

void PulseSimulator::simulate(RandomStream& rng, PulseOutcome& out) const {
  const std::size_t n = samplers_.size();
  out.pairs.resize(n);
  out.idlers.resize(n);
  out.herald_click.resize(n);

  for (std::size_t k = 0; k < n; ++k) {
    const int pairs = samplers_[k](rng);
    out.pairs[k] = pairs;
    const int signal = thin_count(pairs, cfg_.signal_channels[k].transmission, rng);
    out.herald_click[k] = click_sample(signal, cfg_.herald_detectors[k], rng) ? 1 : 0;
    out.idlers[k] = thin_count(pairs, cfg_.idler_channels[k].transmission, rng);
  }

  // The switch blocks every idler except the selected source's.
  out.selected = route_select(out.herald_click, cfg_.routing);
  out.output_photons = out.selected ? thin_count(out.idlers[*out.selected], path_transmission_[*out.selected], rng) : 0;
  out.output_click = click_sample(out.output_photons, cfg_.output_detector, rng);

  out.hbt_a_click = false;
  out.hbt_b_click = false;
  if (cfg_.hbt_enabled) {
    const int to_a = thin_count(out.output_photons, 0.5, rng);
    out.hbt_a_click = click_sample(to_a, cfg_.hbt_detectors[0], rng);
    out.hbt_b_click = click_sample(out.output_photons - to_a, cfg_.hbt_detectors[1], rng);
  }
}

PulseOutcome PulseSimulator::simulate(RandomStream& rng) const {
  PulseOutcome out;
  simulate(rng, out);
  return out;
}

PulseOutcome simulate_pulse(const SystemConfig& cfg, RandomStream& rng) {
  return PulseSimulator(cfg).simulate(rng);
}

namespace {

void tally_pulse(const PulseOutcome& p, bool hbt, TallyCounters& t) {
  ++t.pulses;
  const bool herald = p.selected.has_value();
  if (herald) {
    ++t.heralds;
    ++t.source_selected[*p.selected];
  }
  for (std::size_t k = 0; k < p.herald_click.size(); ++k) t.source_heralds[k] += p.herald_click[k];
  if (p.output_click) {
    ++t.output_singles;
    if (herald) ++t.coincidences;
  }
  if (hbt) {
    HbtTally& h = t.hbt_at(0);
    ++h.pulse_norm;
    h.singles_a += p.hbt_a_click;
    h.singles_b += p.hbt_b_click;
    h.pairs_ab += p.hbt_a_click && p.hbt_b_click;
    if (herald) {
      ++h.herald_norm;
      h.heralded_a += p.hbt_a_click;
      h.heralded_b += p.hbt_b_click;
      h.heralded_pairs_both += p.hbt_a_click && p.hbt_b_click;
    }
  }
}

void tally_offset(const PulseOutcome& at_k, const PulseOutcome& at_k_plus_n, HbtTally& h) {
  const bool a = at_k.hbt_a_click;
  const bool b = at_k_plus_n.hbt_b_click;
  ++h.pulse_norm;
  h.singles_a += a;
  h.singles_b += b;
  h.pairs_ab += a && b;
  if (at_k.selected && at_k_plus_n.selected) {
    ++h.herald_norm;
    h.heralded_a += a;
    h.heralded_b += b;
    h.heralded_pairs_both += a && b;
  }
}

// Pairing of consecutive pulses (prev = k, cur = k + 1).
void tally_pair(const PulseOutcome& prev, const PulseOutcome& cur, bool hbt, TallyCounters& t) {
  if (prev.selected && cur.output_click) ++t.accidentals;
  if (hbt) {
    tally_offset(prev, cur, t.hbt_at(+1));
    tally_offset(cur, prev, t.hbt_at(-1));
  }
}

std::uint64_t chunk_pulses(std::uint64_t chunk, std::uint64_t total) {
  const std::uint64_t begin = chunk * kPulsesPerChunk;
  return std::min(kPulsesPerChunk, total - begin);
}

TallyCounters run_chunks(const PulseSimulator& sim, std::uint64_t seed, std::uint64_t chunk_begin,
                         std::uint64_t chunk_end, std::uint64_t total_pulses) {
  const std::uint64_t n_chunks = (total_pulses + kPulsesPerChunk - 1) / kPulsesPerChunk;
  const bool hbt = sim.config().hbt_enabled;
  TallyCounters t(sim.source_count());
  PulseOutcome prev;
  PulseOutcome cur;
  bool have_prev = false;
  for (std::uint64_t c = chunk_begin; c < chunk_end; ++c) {
    RandomStream rng(seed, c);
    const std::uint64_t count = chunk_pulses(c, total_pulses);
    for (std::uint64_t i = 0; i < count; ++i) {
      sim.simulate(rng, cur);
      tally_pulse(cur, hbt, t);
      if (have_prev) tally_pair(prev, cur, hbt, t);
      std::swap(prev, cur);
      have_prev = true;
    }
  }
  if (have_prev && chunk_end < n_chunks) {
    RandomStream rng(seed, chunk_end);
    sim.simulate(rng, cur);
    tally_pair(prev, cur, hbt, t);
  }
  return t;
}

}  // namespace

TallyCounters run_experiment(const SystemConfig& cfg, std::uint64_t seed, unsigned threads) {
  const PulseSimulator sim(cfg);
  const std::uint64_t n_chunks = (cfg.pulses + kPulsesPerChunk - 1) / kPulsesPerChunk;
  const std::uint64_t workers = std::clamp<std::uint64_t>(threads, 1, n_chunks);

  std::vector<TallyCounters> partial(workers);
  auto bounds = [&](std::uint64_t w) { return w * n_chunks / workers; };
  if (workers == 1) {
    partial[0] = run_chunks(sim, seed, 0, n_chunks, cfg.pulses);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::uint64_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] { partial[w] = run_chunks(sim, seed, bounds(w), bounds(w + 1), cfg.pulses); });
    }
    for (auto& th : pool) th.join();
  }

  TallyCounters total(cfg.sources.size());
  for (const auto& p : partial) total = merge_tallies(total, p);
  return total;
}

}  // namespace muxsim
