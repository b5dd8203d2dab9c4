#include "muxsim/photon_stats.hpp"

#include <fmt/format.h>

namespace muxsim {

std::string_view to_string(PairStatistics kind) noexcept {
  switch (kind) {
    case PairStatistics::Poissonian:
      return "poissonian";
    case PairStatistics::Thermal:
      return "thermal";
    case PairStatistics::PointMass:
      return "point_mass";
  }
  return "unknown";
}

PairStatistics pair_statistics_from_string(std::string_view name) {
  if (name == "poissonian") return PairStatistics::Poissonian;
  if (name == "thermal") return PairStatistics::Thermal;
  if (name == "point_mass") return PairStatistics::PointMass;
  throw InvalidParameterError(
      fmt::format("unknown statistics kind '{}' (expected poissonian, thermal or point_mass)", name));
}

void validate(const PairNumberDistribution& dist) {
  if (!(dist.mu >= 0.0) || !std::isfinite(dist.mu)) {
    throw InvalidParameterError(fmt::format("mu must be finite and >= 0, got {}", dist.mu));
  }
  if (dist.n_max < 1) {
    throw InvalidParameterError(fmt::format("n_max must be >= 1, got {}", dist.n_max));
  }
  if (dist.kind == PairStatistics::PointMass && std::floor(dist.mu) != dist.mu) {
    throw InvalidParameterError(fmt::format("point_mass mu must be an integer, got {}", dist.mu));
  }
  const double tail = tail_mass(dist);
  if (!(tail < PairNumberDistribution::kMaxTailMass)) {
    throw InvalidParameterError(
        fmt::format("n_max={} leaves tail mass {:.3g} for {} mu={} (need < {:g}; use n_max >= {})",
                    dist.n_max, tail, to_string(dist.kind), dist.mu,
                    PairNumberDistribution::kMaxTailMass, minimal_n_max(dist.kind, dist.mu)));
  }
}

int minimal_n_max(PairStatistics kind, double mu) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw InvalidParameterError(fmt::format("mu must be finite and >= 0, got {}", mu));
  }
  PairNumberDistribution dist{kind, mu, PairNumberDistribution::kDefaultNMax};
  if (kind == PairStatistics::PointMass) {
    dist.n_max = std::max(dist.n_max, static_cast<int>(mu));
    return dist.n_max;
  }
  while (!(tail_mass(dist) < PairNumberDistribution::kMaxTailMass)) {
    if (dist.n_max > 1'000'000) {
      throw InvalidParameterError(fmt::format("mu={} needs an unreasonable truncation order", mu));
    }
    dist.n_max = dist.n_max < 64 ? dist.n_max + 1 : dist.n_max + dist.n_max / 8;
  }
  return dist.n_max;
}

PairNumberDistribution PairNumberDistribution::auto_truncated(PairStatistics kind, double mu) {
  return {kind, mu, minimal_n_max(kind, mu)};
}

PairCountSampler::PairCountSampler(const PairNumberDistribution& dist) : kind_(dist.kind), mu_(dist.mu) {
  validate(dist);
  if (kind_ == PairStatistics::Poissonian) {
    p_zero_ = std::exp(-mu_);
  } else if (kind_ == PairStatistics::Thermal && mu_ > 0.0) {
    log_ratio_ = std::log(mu_) - std::log1p(mu_);
  }
}

int PairCountSampler::operator()(RandomStream& rng) const {
  if (mu_ == 0.0) return 0;
  switch (kind_) {
    case PairStatistics::PointMass:
      return static_cast<int>(mu_);
    case PairStatistics::Thermal:
      // P(N >= n) = (mu / (1 + mu))^n
      return static_cast<int>(std::floor(std::log1p(-rng.uniform()) / log_ratio_));
    case PairStatistics::Poissonian: {
      const double u = rng.uniform();
      double term = p_zero_;
      double cdf = term;
      int n = 0;
      while (u >= cdf) {
        ++n;
        term *= mu_ / n;
        cdf += term;
        if (term == 0.0) break;  // cdf saturated below u by rounding
      }
      return n;
    }
  }
  return 0;
}

int sample_pair_count(const PairNumberDistribution& dist, RandomStream& rng) {
  return PairCountSampler(dist)(rng);
}

int thin_count(int n, double eta, RandomStream& rng) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw InvalidParameterError(fmt::format("eta must lie in [0, 1], got {}", eta));
  }
  if (n < 0) throw InvalidParameterError("photon number must be >= 0");
  if (eta == 1.0) return n;
  if (eta == 0.0) return 0;
  int kept = 0;
  for (int i = 0; i < n; ++i) kept += rng.bernoulli(eta) ? 1 : 0;
  return kept;
}

}  // namespace muxsim
