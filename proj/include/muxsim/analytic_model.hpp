#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "muxsim/components.hpp"
#include "muxsim/estimators.hpp"
#include "muxsim/mux_engine.hpp"
#include "muxsim/photon_stats.hpp"

namespace muxsim {

/// One source as seen by the exact model: pair law, arm transmissions,
/// detectors and the transmission of its route through the switch tree.
struct AnalyticParams {
  PairNumberDistribution dist;
  double eta_s = 1.0;
  double eta_i = 1.0;
  DetectorSpec det_s;
  DetectorSpec det_i;
  double switch_path_transmission = 1.0;

  /// Per-photon detection probability in the herald arm.
  double herald_efficiency() const noexcept { return eta_s * det_s.efficiency; }
  /// Per-photon detection probability in the output arm, switch included.
  double output_efficiency() const noexcept { return eta_i * switch_path_transmission * det_i.efficiency; }
};

void validate(const AnalyticParams& p);

/// Per-pulse click probabilities of one source with both arms always
/// detected (no gating by the switch).
template <typename Scalar = double>
struct ClickProbabilities {
  Scalar herald{};
  Scalar output{};
  Scalar coincidence{};
};

/// Exact expectations over the truncated pair law (tail < kMaxTailMass):
///   herald      = 1 - (1 - d_s) sum_n P(n) (1 - eta_s e_s)^n
///   output      = 1 - (1 - d_i) sum_n P(n) (1 - eta_i t e_i)^n
///   coincidence = sum_n P(n) [1 - (1 - d_s)(1 - eta_s e_s)^n][1 - (1 - d_i)(1 - eta_i t e_i)^n]
template <typename Scalar = double>
ClickProbabilities<Scalar> analytic_click_probs(const AnalyticParams& p) {
  validate(p);
  const Pmf<Scalar> pmf = truncated_pmf<Scalar>(p.dist);
  const Eigen::Index size = pmf.size();
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  const Scalar miss_s = Scalar(1) - static_cast<Scalar>(p.herald_efficiency());
  const Scalar miss_i = Scalar(1) - static_cast<Scalar>(p.output_efficiency());
  Array silent_s(size);
  Array silent_i(size);
  Scalar ps(1);
  Scalar pi(1);
  for (Eigen::Index n = 0; n < size; ++n) {
    silent_s[n] = ps;
    silent_i[n] = pi;
    ps *= miss_s;
    pi *= miss_i;
  }
  silent_s *= Scalar(1) - static_cast<Scalar>(p.det_s.dark_prob);
  silent_i *= Scalar(1) - static_cast<Scalar>(p.det_i.dark_prob);

  const Array both = (Scalar(1) - silent_s) * (Scalar(1) - silent_i);
  return {Scalar(1) - pmf.dot(silent_s.matrix()), Scalar(1) - pmf.dot(silent_i.matrix()),
          pmf.dot(both.matrix())};
}

/// Ungated single-source CAR: coincidence / (herald * output). The accidental
/// rate is the product of marginals, i.e. independent pulses.
double analytic_car(const AnalyticParams& p);

/// Per-pulse probabilities of the multiplexed output, which is gated: only the
/// selected source's idlers reach the output detector.
struct MuxProbabilities {
  double herald = 0.0;       // at least one herald click
  double output = 0.0;       // output detector click
  double coincidence = 0.0;  // herald and output click
  double no_herald = 1.0;    // product of (1 - p_herald) over sources

  /// coincidence / (herald * output), matching the +1-pulse accidental bin.
  double car() const;
};

/// Priority routing composition:
///   coincidence = sum_k [prod_{j before k} (1 - h_j)] c_k
///   output      = coincidence + prod_j (1 - h_j) d_out
/// All sources share the output detector, so their det_i.dark_prob must agree.
MuxProbabilities analytic_mux_rate(std::span<const AnalyticParams> sources, const RoutingPolicy& policy);

/// Click probabilities at the two HBT detectors behind a lossless 50/50 split
/// of the multiplexed output.
struct HbtProbabilities {
  double herald = 0.0;
  double herald_a = 0.0;
  double herald_b = 0.0;
  double herald_ab = 0.0;
  double a = 0.0;
  double b = 0.0;
  double ab = 0.0;

  double heralded_g2() const { return herald * herald_ab / (herald_a * herald_b); }
  double unheralded_g2() const { return ab / (a * b); }
};

HbtProbabilities analytic_hbt(std::span<const AnalyticParams> sources, const RoutingPolicy& policy,
                              const std::array<DetectorSpec, 2>& hbt_detectors);

/// Exact-model view of a system: one AnalyticParams per source.
std::vector<AnalyticParams> analytic_params(const SystemConfig& cfg);
MuxProbabilities analytic_system(const SystemConfig& cfg);
HbtProbabilities analytic_system_hbt(const SystemConfig& cfg);

/// p_coincidence_mux / p_coincidence_single - 1.
double enhancement_factor(const AnalyticParams& single, const MuxProbabilities& mux);

/// A CAR-versus-rate family: the template sources are pumped together with
/// their mu values multiplied by a common scale, and every route shares one
/// switch transmission.
struct CarCurveModel {
  std::vector<AnalyticParams> sources;
  RoutingPolicy routing;
  double repetition_period = 1e-8;
};

/// Template with every mu scaled by `pump_scale` and, if `switch_transmission`
/// is non-negative, every route transmission replaced by it. Truncation
/// orders are re-derived for the new mu.
std::vector<AnalyticParams> scaled_sources(const CarCurveModel& model, double pump_scale,
                                           double switch_transmission = -1.0);

/// Pump scale at which the model's heralded rate (coincidences / T) equals
/// `heralded_rate`. Throws NoSolutionError outside the reachable range.
double pump_scale_for_rate(const CarCurveModel& model, double switch_transmission, double heralded_rate);

/// Gated multiplexed CAR at a given heralded rate.
double model_car_at_rate(const CarCurveModel& model, double switch_transmission, double heralded_rate);

/// Rate gain at fixed CAR: each model is driven (along its falling,
/// multi-pair-limited branch) to `target_car`, and the ratio of the resulting
/// coincidence probabilities minus one is returned. Throws NoSolutionError if
/// either model cannot reach the target.
double fixed_car_enhancement(const AnalyticParams& single, const CarCurveModel& mux, double target_car);

struct ScalingParams {
  std::size_t n_sources = 1;
  double per_stage_transmission = 1.0;
  double herald_prob_per_source = 0.0;

  int stages() const { return switch_stages(n_sources); }
};

struct ScalingResult {
  int stages = 0;
  double rate_factor = 1.0;      // R(N) = [1 - (1 - p)^N] / p * t_s^stages
  double two_photon_gain = 1.0;  // R(N)^2
};

/// Uses the p -> 0 limit N when p = 0.
ScalingResult scaling_with_N(const ScalingParams& sp);

/// Per-stage transmission at which R(N) = 1.
double break_even_stage_transmission(std::size_t n_sources, double herald_prob_per_source);

struct SwitchFit {
  double transmission = 0.0;
  double sum_squared_residuals = 0.0;
  std::vector<double> residuals;  // model - observed CAR, per point
  bool at_lower_bound = false;
  bool at_upper_bound = false;
};

/// Least-squares fit of the common switch transmission t in [0, 1] to observed
/// (heralded_rate, CAR) points: a 0.01 grid followed by Brent refinement to
/// 1e-4. Throws IllPosedError for fewer than three points or a degenerate
/// rate axis.
SwitchFit fit_switch_transmission(std::span<const CurvePoint> observed, const CarCurveModel& model);

}  // namespace muxsim
