#pragma once

#include <optional>

#include "muxsim/mux_engine.hpp"

namespace muxsim {

/// Value with a one-sigma error from independent-Poisson propagation.
struct Estimate {
  double value = 0.0;
  double std_err = 0.0;

  friend bool operator==(const Estimate&, const Estimate&) = default;
};

/// One sample of a CAR-versus-rate curve.
struct CurvePoint {
  double swept_value = 0.0;
  Estimate heralded_rate;  // counts per second
  Estimate car;
  std::optional<Estimate> g2_0;
  std::optional<Estimate> g2_plus;
  std::optional<Estimate> g2_minus;
  std::optional<double> analytic_car;
  std::optional<double> analytic_rate;
};

/// Coincidences per second: C / (pulses T) with error sqrt(C) / (pulses T).
Estimate estimate_heralded_rate(const TallyCounters& t, double repetition_period);

/// Coincidences per pulse, C / pulses.
Estimate estimate_coincidence_probability(const TallyCounters& t);

/// Raw coincidence-to-accidental ratio C / A (no dark-count subtraction).
/// Throws UndefinedEstimateError when A = 0.
Estimate estimate_car(const TallyCounters& t);

/// g2 at offset n in {-1, 0, +1}.
///   heralded:   herald_norm * both / (heralded_a * heralded_b)
///   unheralded: pulse_norm * pairs_ab / (singles_a * singles_b)
/// pulse_norm equals `pulses` at offset 0 and counts the pulse pairs actually
/// formed at offsets +-1. Throws UndefinedEstimateError on a zero denominator.
Estimate estimate_g2(const TallyCounters& t, int offset, bool heralded);

// Count-level forms; inputs may be expected counts or probabilities.
Estimate car_from_counts(double coincidences, double accidentals);
Estimate g2_from_counts(double norm, double both, double singles_a, double singles_b);

}  // namespace muxsim
