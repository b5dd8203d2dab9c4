#pragma once

#include <cmath>
#include <cstdint>

#include "muxsim/mux_engine.hpp"

namespace muxsim::testing {

/// |observed - expected| <= k sigma.
inline bool within_sigma(double observed, double expected, double sigma, double k = 3.0) {
  return std::abs(observed - expected) <= k * sigma;
}

/// One-sigma error of a frequency count/n with success probability p.
inline double binomial_sigma(double p, std::uint64_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

/// Two sources behind one 2x1 switch with the measured 85.1 % / 79.4 % port
/// transmissions, 0.4 arm transmissions and 25 % detectors.
inline SystemConfig two_source_setup(double mu, PairStatistics kind = PairStatistics::Poissonian,
                                      double dark = 1e-5) {
  SystemConfig cfg = SystemConfig::uniform(2, PairNumberDistribution::auto_truncated(kind, mu));
  for (std::size_t k = 0; k < 2; ++k) {
    cfg.signal_channels[k].transmission = 0.4;
    cfg.idler_channels[k].transmission = 0.4;
    cfg.herald_detectors[k] = {0.25, dark};
  }
  cfg.switch_tree = {SwitchSpec{{0.851, 0.794}}};
  cfg.output_detector = {0.25, dark};
  cfg.hbt_enabled = true;
  cfg.hbt_detectors = {DetectorSpec{0.25, dark}, DetectorSpec{0.25, dark}};
  return cfg;
}

}  // namespace muxsim::testing
