#include "muxsim/analytic_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

namespace muxsim {

namespace {

using ArrayD = Eigen::ArrayXd;

constexpr double kMuCap = 30.0;

ArrayD powers(double base, Eigen::Index size) {
  ArrayD out(size);
  double acc = 1.0;
  for (Eigen::Index n = 0; n < size; ++n) {
    out[n] = acc;
    acc *= base;
  }
  return out;
}

// Products of (1 - p_herald) over sources ahead of each source in priority order.
std::vector<double> survival_before(std::span<const double> herald_probs, const RoutingPolicy& policy) {
  std::vector<double> ahead(herald_probs.size());
  double none = 1.0;
  for (std::size_t k : policy.order) {
    ahead[k] = none;
    none *= 1.0 - herald_probs[k];
  }
  return ahead;
}

void check_sources(std::span<const AnalyticParams> sources, const RoutingPolicy& policy) {
  if (sources.empty()) throw InvalidParameterError("at least one source is required");
  validate(policy, sources.size());
  for (const auto& s : sources) {
    validate(s);
    if (s.det_i.dark_prob != sources.front().det_i.dark_prob) {
      throw InvalidParameterError("multiplexed sources share one output detector; det_i.dark_prob must agree");
    }
  }
}

double bisect_log(const std::function<double(double)>& f, double lo, double hi) {
  boost::uintmax_t max_iter = 200;
  const auto root = boost::math::tools::toms748_solve(
      [&](double log_x) { return f(std::exp(log_x)); }, std::log(lo), std::log(hi),
      boost::math::tools::eps_tolerance<double>(48), max_iter);
  return std::exp(0.5 * (root.first + root.second));
}

// Locates x on the falling branch of `car(x)` (x > 0, log grid on [lo, hi])
// where car(x) = target.
double solve_falling_branch(const std::function<double(double)>& car, double lo, double hi, double target,
                            std::string_view what) {
  constexpr int kGrid = 241;
  const double step = std::log(hi / lo) / (kGrid - 1);
  int best = 0;
  double best_car = -1.0;
  for (int i = 0; i < kGrid; ++i) {
    const double c = car(lo * std::exp(step * i));
    if (c > best_car) {
      best_car = c;
      best = i;
    }
  }
  const double x_peak = lo * std::exp(step * best);
  const double car_hi = car(hi);
  if (target > best_car || target < car_hi) {
    throw NoSolutionError(fmt::format("target CAR {} unreachable for the {} model (range [{:.4g}, {:.4g}])", target,
                                      what, car_hi, best_car));
  }
  if (target == best_car) return x_peak;
  return bisect_log([&](double x) { return car(x) - target; }, x_peak, hi);
}

}  // namespace

void validate(const AnalyticParams& p) {
  validate(p.dist);
  validate(p.det_s);
  validate(p.det_i);
  if (!(p.eta_s >= 0.0 && p.eta_s <= 1.0)) throw InvalidParameterError("eta_s must lie in [0, 1]");
  if (!(p.eta_i >= 0.0 && p.eta_i <= 1.0)) throw InvalidParameterError("eta_i must lie in [0, 1]");
  if (!(p.switch_path_transmission >= 0.0 && p.switch_path_transmission <= 1.0)) {
    throw InvalidParameterError("switch_path_transmission must lie in [0, 1]");
  }
}

double analytic_car(const AnalyticParams& p) {
  const auto probs = analytic_click_probs(p);
  const double denom = probs.herald * probs.output;
  if (!(denom > 0.0)) throw UndefinedEstimateError("analytic CAR undefined: herald or output probability is zero");
  return probs.coincidence / denom;
}

double MuxProbabilities::car() const {
  const double denom = herald * output;
  if (!(denom > 0.0)) throw UndefinedEstimateError("analytic CAR undefined: herald or output probability is zero");
  return coincidence / denom;
}

MuxProbabilities analytic_mux_rate(std::span<const AnalyticParams> sources, const RoutingPolicy& policy) {
  check_sources(sources, policy);
  std::vector<double> herald(sources.size());
  std::vector<double> coincidence(sources.size());
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const auto probs = analytic_click_probs(sources[k]);
    herald[k] = probs.herald;
    coincidence[k] = probs.coincidence;
  }
  const std::vector<double> ahead = survival_before(herald, policy);

  MuxProbabilities mux;
  mux.coincidence = 0.0;
  for (std::size_t k = 0; k < sources.size(); ++k) mux.coincidence += ahead[k] * coincidence[k];
  mux.no_herald = 1.0;
  for (double h : herald) mux.no_herald *= 1.0 - h;
  mux.herald = 1.0 - mux.no_herald;
  mux.output = mux.coincidence + mux.no_herald * sources.front().det_i.dark_prob;
  return mux;
}

HbtProbabilities analytic_hbt(std::span<const AnalyticParams> sources, const RoutingPolicy& policy,
                              const std::array<DetectorSpec, 2>& hbt_detectors) {
  check_sources(sources, policy);
  validate(hbt_detectors[0]);
  validate(hbt_detectors[1]);
  const DetectorSpec& da = hbt_detectors[0];
  const DetectorSpec& db = hbt_detectors[1];

  struct Terms {
    double h, ha, hb, hab;
  };
  std::vector<Terms> terms(sources.size());
  std::vector<double> herald(sources.size());
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const AnalyticParams& s = sources[k];
    const PmfD pmf = truncated_pmf(s.dist);
    const Eigen::Index size = pmf.size();
    // Each output photon independently reaches and fires arm a (q_a) or arm b (q_b).
    const double reach = s.eta_i * s.switch_path_transmission;
    const double q_a = 0.5 * reach * da.efficiency;
    const double q_b = 0.5 * reach * db.efficiency;

    const ArrayD h = 1.0 - (1.0 - s.det_s.dark_prob) * powers(1.0 - s.herald_efficiency(), size);
    const ArrayD silent_a = (1.0 - da.dark_prob) * powers(1.0 - q_a, size);
    const ArrayD silent_b = (1.0 - db.dark_prob) * powers(1.0 - q_b, size);
    const ArrayD silent_ab = (1.0 - da.dark_prob) * (1.0 - db.dark_prob) * powers(1.0 - q_a - q_b, size);
    const ArrayD both = 1.0 - silent_a - silent_b + silent_ab;

    herald[k] = pmf.dot(h.matrix());
    terms[k] = {herald[k], pmf.dot((h * (1.0 - silent_a)).matrix()), pmf.dot((h * (1.0 - silent_b)).matrix()),
                pmf.dot((h * both).matrix())};
  }
  const std::vector<double> ahead = survival_before(herald, policy);

  HbtProbabilities out;
  double none = 1.0;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    out.herald_a += ahead[k] * terms[k].ha;
    out.herald_b += ahead[k] * terms[k].hb;
    out.herald_ab += ahead[k] * terms[k].hab;
    none *= 1.0 - herald[k];
  }
  out.herald = 1.0 - none;
  out.a = out.herald_a + none * da.dark_prob;
  out.b = out.herald_b + none * db.dark_prob;
  out.ab = out.herald_ab + none * da.dark_prob * db.dark_prob;
  return out;
}

std::vector<AnalyticParams> analytic_params(const SystemConfig& cfg) {
  validate(cfg);
  const std::vector<double> paths = switch_path_transmissions(cfg);
  std::vector<AnalyticParams> out(cfg.sources.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = {cfg.sources[k],
              cfg.signal_channels[k].transmission,
              cfg.idler_channels[k].transmission,
              cfg.herald_detectors[k],
              cfg.output_detector,
              paths[k]};
  }
  return out;
}

MuxProbabilities analytic_system(const SystemConfig& cfg) {
  return analytic_mux_rate(analytic_params(cfg), cfg.routing);
}

HbtProbabilities analytic_system_hbt(const SystemConfig& cfg) {
  return analytic_hbt(analytic_params(cfg), cfg.routing, cfg.hbt_detectors);
}

double enhancement_factor(const AnalyticParams& single, const MuxProbabilities& mux) {
  const double base = analytic_click_probs(single).coincidence;
  if (!(base > 0.0)) throw InvalidParameterError("single-source coincidence probability must be > 0");
  return mux.coincidence / base - 1.0;
}

std::vector<AnalyticParams> scaled_sources(const CarCurveModel& model, double pump_scale,
                                           double switch_transmission) {
  if (!(pump_scale >= 0.0) || !std::isfinite(pump_scale)) throw InvalidParameterError("pump scale must be >= 0");
  std::vector<AnalyticParams> out = model.sources;
  for (auto& s : out) {
    if (s.dist.kind == PairStatistics::PointMass) {
      throw InvalidParameterError("a point-mass source cannot be pump-scaled");
    }
    s.dist = PairNumberDistribution::auto_truncated(s.dist.kind, s.dist.mu * pump_scale);
    if (switch_transmission >= 0.0) s.switch_path_transmission = switch_transmission;
  }
  return out;
}

namespace {

double max_template_mu(const CarCurveModel& model) {
  if (model.sources.empty()) throw InvalidParameterError("CAR model needs at least one source");
  double mu = 0.0;
  for (const auto& s : model.sources) mu = std::max(mu, s.dist.mu);
  if (!(mu > 0.0)) throw IllPosedError("CAR model sources all have mu = 0; nothing to scale");
  return mu;
}

}  // namespace

double pump_scale_for_rate(const CarCurveModel& model, double switch_transmission, double heralded_rate) {
  if (!(model.repetition_period > 0.0)) throw InvalidParameterError("repetition period must be > 0");
  const double target = heralded_rate * model.repetition_period;
  const double hi = kMuCap / max_template_mu(model);
  const double lo = hi * 1e-12;
  auto coincidence_at = [&](double s) {
    return analytic_mux_rate(scaled_sources(model, s, switch_transmission), model.routing).coincidence;
  };
  const double c_hi = coincidence_at(hi);
  const double c_lo = coincidence_at(lo);
  if (!(target <= c_hi) || !(target >= c_lo)) {
    throw NoSolutionError(fmt::format("heralded rate {} outside the model's reachable range [{:.4g}, {:.4g}]",
                                      heralded_rate, c_lo / model.repetition_period,
                                      c_hi / model.repetition_period));
  }
  if (target == c_hi) return hi;
  if (target == c_lo) return lo;
  return bisect_log([&](double s) { return coincidence_at(s) - target; }, lo, hi);
}

double model_car_at_rate(const CarCurveModel& model, double switch_transmission, double heralded_rate) {
  const double scale = pump_scale_for_rate(model, switch_transmission, heralded_rate);
  return analytic_mux_rate(scaled_sources(model, scale, switch_transmission), model.routing).car();
}

double fixed_car_enhancement(const AnalyticParams& single, const CarCurveModel& mux, double target_car) {
  validate(single);
  if (single.dist.kind == PairStatistics::PointMass) {
    throw InvalidParameterError("a point-mass source has no CAR curve");
  }
  auto single_at = [&](double mu) {
    AnalyticParams p = single;
    p.dist = PairNumberDistribution::auto_truncated(single.dist.kind, mu);
    return p;
  };
  const double mu_single = solve_falling_branch([&](double mu) { return analytic_car(single_at(mu)); }, 1e-9,
                                                kMuCap, target_car, "single-source");

  const double hi = kMuCap / max_template_mu(mux);
  const double scale = solve_falling_branch(
      [&](double s) { return analytic_mux_rate(scaled_sources(mux, s), mux.routing).car(); }, hi * 1e-9, hi,
      target_car, "multiplexed");

  const double c_single = analytic_click_probs(single_at(mu_single)).coincidence;
  const double c_mux = analytic_mux_rate(scaled_sources(mux, scale), mux.routing).coincidence;
  return c_mux / c_single - 1.0;
}

ScalingResult scaling_with_N(const ScalingParams& sp) {
  if (sp.n_sources < 1) throw InvalidParameterError("n_sources must be >= 1");
  const double p = sp.herald_prob_per_source;
  const double t = sp.per_stage_transmission;
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameterError("herald_prob_per_source must lie in [0, 1]");
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidParameterError("per_stage_transmission must lie in [0, 1]");

  const double n = static_cast<double>(sp.n_sources);
  // [1 - (1 - p)^N] / p, written to stay accurate as p -> 0.
  const double herald_gain = p == 0.0 ? n : -std::expm1(n * std::log1p(-p)) / p;
  ScalingResult r;
  r.stages = sp.stages();
  r.rate_factor = herald_gain * std::pow(t, r.stages);
  r.two_photon_gain = r.rate_factor * r.rate_factor;
  return r;
}

double break_even_stage_transmission(std::size_t n_sources, double herald_prob_per_source) {
  if (n_sources < 2) throw InvalidParameterError("break-even needs at least two sources");
  const ScalingResult lossless = scaling_with_N({n_sources, 1.0, herald_prob_per_source});
  return std::pow(1.0 / lossless.rate_factor, 1.0 / lossless.stages);
}

SwitchFit fit_switch_transmission(std::span<const CurvePoint> observed, const CarCurveModel& model) {
  if (observed.size() < 3) throw IllPosedError("fit needs at least three points");
  const auto [lo_it, hi_it] = std::minmax_element(observed.begin(), observed.end(), [](const auto& a, const auto& b) {
    return a.heralded_rate.value < b.heralded_rate.value;
  });
  if (lo_it->heralded_rate.value == hi_it->heralded_rate.value) {
    throw IllPosedError("all observed heralded rates are equal; the transmission is not identifiable");
  }
  for (const auto& pt : observed) {
    if (!std::isfinite(pt.car.value) || !std::isfinite(pt.heralded_rate.value)) {
      throw IllPosedError("observed points must have finite rate and CAR");
    }
  }

  constexpr double kUnreachable = 1e300;
  auto residuals_at = [&](double t, std::vector<double>* residuals) {
    double sse = 0.0;
    for (const auto& pt : observed) {
      double r;
      try {
        r = model_car_at_rate(model, t, pt.heralded_rate.value) - pt.car.value;
      } catch (const NoSolutionError&) {
        return kUnreachable;
      } catch (const UndefinedEstimateError&) {
        return kUnreachable;
      }
      if (residuals) residuals->push_back(r);
      sse += r * r;
    }
    return sse;
  };
  auto sse = [&](double t) { return residuals_at(t, nullptr); };

  constexpr int kGrid = 100;
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGrid; ++i) {
    const double value = sse(static_cast<double>(i) / kGrid);
    if (value < best_sse) {
      best_sse = value;
      best = i;
    }
  }
  if (best_sse >= kUnreachable) {
    throw NoSolutionError("observed rates are unreachable for every switch transmission in [0, 1]");
  }

  const double lo = std::max(0, best - 1) / static_cast<double>(kGrid);
  const double hi = std::min(kGrid, best + 1) / static_cast<double>(kGrid);
  auto [t_fit, sse_fit] = boost::math::tools::brent_find_minima(sse, lo, hi, 24);
  // Brent never evaluates the bracket ends; pin to a bound when it is better.
  for (double edge : {0.0, 1.0}) {
    if ((edge == lo || edge == hi) && std::abs(t_fit - edge) < 1e-3) {
      const double edge_sse = sse(edge);
      if (edge_sse <= sse_fit) {
        t_fit = edge;
        sse_fit = edge_sse;
      }
    }
  }

  SwitchFit fit;
  fit.transmission = t_fit;
  fit.sum_squared_residuals = residuals_at(t_fit, &fit.residuals);
  if (fit.residuals.size() != observed.size()) {
    throw NoSolutionError("observed rates are unreachable at the fitted switch transmission");
  }
  fit.at_lower_bound = t_fit <= 1e-4;
  fit.at_upper_bound = t_fit >= 1.0 - 1e-4;
  return fit;
}

}  // namespace muxsim
