#include "muxsim/estimators.hpp"

#include <cmath>

#include <fmt/format.h>

namespace muxsim {

namespace {

void require_pulses(const TallyCounters& t) {
  if (t.pulses == 0) throw InvalidParameterError("tallies contain zero pulses");
}

}  // namespace

Estimate estimate_heralded_rate(const TallyCounters& t, double repetition_period) {
  require_pulses(t);
  if (!(repetition_period > 0.0)) throw InvalidParameterError("repetition period must be > 0");
  const double exposure = static_cast<double>(t.pulses) * repetition_period;
  const double c = static_cast<double>(t.coincidences);
  return {c / exposure, std::sqrt(c) / exposure};
}

Estimate estimate_coincidence_probability(const TallyCounters& t) {
  require_pulses(t);
  const double n = static_cast<double>(t.pulses);
  const double c = static_cast<double>(t.coincidences);
  return {c / n, std::sqrt(c) / n};
}

Estimate car_from_counts(double coincidences, double accidentals) {
  if (!(accidentals > 0.0)) {
    throw UndefinedEstimateError("CAR undefined: zero accidentals (increase pulses)");
  }
  const double car = coincidences / accidentals;
  // var = C / A^2 + C^2 / A^3
  const double var = coincidences / (accidentals * accidentals) + car * car / accidentals;
  return {car, std::sqrt(var)};
}

Estimate estimate_car(const TallyCounters& t) {
  return car_from_counts(static_cast<double>(t.coincidences), static_cast<double>(t.accidentals));
}

Estimate g2_from_counts(double norm, double both, double singles_a, double singles_b) {
  if (!(singles_a > 0.0) || !(singles_b > 0.0) || !(norm > 0.0)) {
    throw UndefinedEstimateError("g2 undefined: zero singles or normalisation count");
  }
  const double g2 = norm * both / (singles_a * singles_b);
  const double d_both = norm / (singles_a * singles_b);
  const double var = d_both * d_both * both + g2 * g2 * (1.0 / norm + 1.0 / singles_a + 1.0 / singles_b);
  return {g2, std::sqrt(var)};
}

Estimate estimate_g2(const TallyCounters& t, int offset, bool heralded) {
  if (offset < -1 || offset > 1) {
    throw InvalidParameterError(fmt::format("g2 offset must be -1, 0 or +1, got {}", offset));
  }
  require_pulses(t);
  const HbtTally& h = t.hbt_at(offset);
  if (heralded) {
    return g2_from_counts(static_cast<double>(h.herald_norm), static_cast<double>(h.heralded_pairs_both),
                          static_cast<double>(h.heralded_a), static_cast<double>(h.heralded_b));
  }
  return g2_from_counts(static_cast<double>(h.pulse_norm), static_cast<double>(h.pairs_ab),
                        static_cast<double>(h.singles_a), static_cast<double>(h.singles_b));
}

}  // namespace muxsim
