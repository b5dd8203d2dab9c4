#include "muxsim/commands.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "muxsim/analytic_model.hpp"
#include "muxsim/csv.hpp"
#include "muxsim/estimators.hpp"

namespace muxsim::cli {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 33> kRunColumns = {
    "n_sources",          "pulses",           "seed",
    "repetition_period_s", "heralds",          "output_singles",
    "coincidences",       "accidentals",      "p_herald",
    "p_coincidence",      "p_coincidence_err", "heralded_rate_hz",
    "heralded_rate_err_hz", "car",            "car_err",
    "g2_0",               "g2_0_err",         "g2_plus",
    "g2_plus_err",        "g2_minus",         "g2_minus_err",
    "g2_0_unheralded",    "g2_0_unheralded_err", "analytic_p_herald",
    "analytic_p_output",  "analytic_p_coincidence", "analytic_rate_hz",
    "analytic_car",       "analytic_g2_0",    "analytic_enhancement",
    "target_car",         "fixed_car_enhancement", "note"};

constexpr std::array<std::string_view, 19> kSweepColumns = {
    "swept_value",      "p_coincidence",    "p_coincidence_err", "heralded_rate_hz", "heralded_rate_err_hz",
    "car",              "car_err",          "g2_0",              "g2_0_err",         "g2_plus",
    "g2_plus_err",      "g2_minus",         "g2_minus_err",      "analytic_p_herald", "analytic_p_coincidence",
    "analytic_rate_hz", "analytic_car",     "analytic_g2_0",     "note"};

constexpr std::array<std::string_view, 7> kScalingColumns = {
    "n_sources",   "stages",          "stage_transmission", "herald_prob_per_source",
    "rate_factor", "two_photon_gain", "break_even_stage_transmission"};

constexpr std::array<std::string_view, 5> kFitColumns = {"heralded_rate_hz", "car_observed", "car_model", "residual",
                                                         "fitted_transmission"};

std::vector<std::string> header(std::span<const std::string_view> columns) {
  return {columns.begin(), columns.end()};
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1U, std::thread::hardware_concurrency());
}

template <typename F>
std::optional<Estimate> try_estimate(F&& f) {
  try {
    return f();
  } catch (const UndefinedEstimateError&) {
    return std::nullopt;
  }
}

template <typename F>
std::optional<double> try_value(F&& f) {
  try {
    return f();
  } catch (const UndefinedEstimateError&) {
    return std::nullopt;
  }
}

std::string value_of(const std::optional<Estimate>& e) { return e ? csv::number(e->value) : std::string(); }
std::string error_of(const std::optional<Estimate>& e) { return e ? csv::number(e->std_err) : std::string(); }

std::string join_notes(const std::vector<std::string>& notes) {
  std::string out;
  for (const auto& n : notes) out += (out.empty() ? "" : ";") + n;
  return out;
}

// Destination of a command's CSV; empty means the console.
std::optional<std::filesystem::path> destination(const CommandOptions& opts, const Scenario* scenario) {
  if (opts.out) return opts.out;
  if (scenario && !scenario->output.empty()) return std::filesystem::path(scenario->output);
  return std::nullopt;
}

json run_metadata(std::string_view command, const CommandOptions& opts) {
  return {{"command", command},
          {"tool", fmt::format("muxsim {}", "0.1.0")},
          {"threads", resolve_threads(opts.threads)},
          {"analytic_only", opts.analytic_only},
          {"chunk_pulses", kPulsesPerChunk},
          {"seed_derivation",
           "chunk c of a run with seed s draws from mt19937_64(splitmix64(splitmix64(s) ^ "
           "(0xD1B54A32D192ED03 * (c + 1)))); sweep point i runs with seed stream_seed(s, i)"}};
}

CommandResult emit(const std::optional<std::filesystem::path>& dest, const std::string& csv_text, json sidecar,
                   std::ostream& console) {
  CommandResult result;
  if (!dest) {
    console << csv_text;
    return result;
  }
  {
    std::ofstream out(*dest, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", dest->string()));
    out << csv_text;
  }
  const auto side = sidecar_path(*dest);
  {
    std::ofstream out(side, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", side.string()));
    out << sidecar.dump(2) << '\n';
  }
  result.files = {*dest, side};
  return result;
}

json sidecar_for(const Scenario& scenario, std::string_view command, const CommandOptions& opts) {
  json j = scenario_to_json(scenario);
  j["run"] = run_metadata(command, opts);
  return j;
}

AnalyticParams unmultiplexed_reference(const std::vector<AnalyticParams>& params, const RoutingPolicy& routing) {
  AnalyticParams single = params[routing.order.front()];
  single.switch_path_transmission = 1.0;
  return single;
}

}  // namespace

std::span<const std::string_view> run_columns() { return kRunColumns; }
std::span<const std::string_view> sweep_columns() { return kSweepColumns; }
std::span<const std::string_view> scaling_columns() { return kScalingColumns; }
std::span<const std::string_view> fit_columns() { return kFitColumns; }

int exit_status(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::InvalidParameter:
      return 3;
    case ErrorCategory::Configuration:
      return 4;
    case ErrorCategory::Parse:
      return 5;
    case ErrorCategory::Undefined:
      return 6;
    case ErrorCategory::NoSolution:
      return 7;
    case ErrorCategory::IllPosed:
      return 8;
    case ErrorCategory::Io:
      return 9;
  }
  return 1;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  std::filesystem::path side = csv_path;
  side.replace_extension(".json");
  if (side == csv_path) side += ".sidecar.json";
  return side;
}

Scenario effective_scenario(const CommandOptions& opts) {
  if (!opts.scenario) throw ConfigurationError("--scenario is required for this command");
  Scenario sc = load_scenario(*opts.scenario);
  if (opts.seed) sc.seed = *opts.seed;
  if (opts.pulses) {
    if (*opts.pulses < 1) throw ConfigurationError("--pulses must be >= 1");
    sc.system.pulses = *opts.pulses;
  }
  if (opts.hbt) sc.system.hbt_enabled = true;
  return sc;
}

CommandResult cmd_run(const CommandOptions& opts, std::ostream& console) {
  const Scenario sc = effective_scenario(opts);
  const SystemConfig& sys = sc.system;
  std::vector<std::string> notes;

  std::optional<TallyCounters> tallies;
  if (!opts.analytic_only) tallies = run_experiment(sys, sc.seed, resolve_threads(opts.threads));

  const auto params = analytic_params(sys);
  const MuxProbabilities mux = analytic_mux_rate(params, sys.routing);
  const std::optional<double> analytic_car = try_value([&] { return mux.car(); });
  std::optional<double> analytic_g2;
  if (sys.hbt_enabled) {
    const HbtProbabilities hbt = analytic_hbt(params, sys.routing, sys.hbt_detectors);
    if (hbt.herald_a > 0.0 && hbt.herald_b > 0.0) analytic_g2 = hbt.heralded_g2();
  }
  const AnalyticParams single = unmultiplexed_reference(params, sys.routing);
  std::optional<double> enhancement;
  if (analytic_click_probs(single).coincidence > 0.0) enhancement = enhancement_factor(single, mux);
  std::optional<double> fixed_car;
  if (opts.target_car) {
    fixed_car = fixed_car_enhancement(single, CarCurveModel{params, sys.routing, sys.repetition_period},
                                      *opts.target_car);
  }

  std::vector<std::string> row;
  row.push_back(std::to_string(sys.source_count()));
  row.push_back(std::to_string(sys.pulses));
  row.push_back(std::to_string(sc.seed));
  row.push_back(csv::number(sys.repetition_period));
  if (tallies) {
    const TallyCounters& t = *tallies;
    const auto car = try_estimate([&] { return estimate_car(t); });
    if (!car) notes.emplace_back("car_undefined");
    const auto coinc = estimate_coincidence_probability(t);
    const auto rate = estimate_heralded_rate(t, sys.repetition_period);
    std::optional<Estimate> g2_0, g2_plus, g2_minus, g2_u;
    if (sys.hbt_enabled) {
      g2_0 = try_estimate([&] { return estimate_g2(t, 0, true); });
      g2_plus = try_estimate([&] { return estimate_g2(t, +1, true); });
      g2_minus = try_estimate([&] { return estimate_g2(t, -1, true); });
      g2_u = try_estimate([&] { return estimate_g2(t, 0, false); });
      if (!g2_0) notes.emplace_back("g2_undefined");
    }
    for (auto v : {t.heralds, t.output_singles, t.coincidences, t.accidentals}) row.push_back(std::to_string(v));
    row.push_back(csv::number(static_cast<double>(t.heralds) / static_cast<double>(t.pulses)));
    row.push_back(csv::number(coinc.value));
    row.push_back(csv::number(coinc.std_err));
    row.push_back(csv::number(rate.value));
    row.push_back(csv::number(rate.std_err));
    for (const auto& e : {car, g2_0, g2_plus, g2_minus, g2_u}) {
      row.push_back(value_of(e));
      row.push_back(error_of(e));
    }
  } else {
    row.resize(row.size() + 19);
  }
  row.push_back(csv::number(mux.herald));
  row.push_back(csv::number(mux.output));
  row.push_back(csv::number(mux.coincidence));
  row.push_back(csv::number(mux.coincidence / sys.repetition_period));
  row.push_back(csv::number(analytic_car));
  row.push_back(csv::number(analytic_g2));
  row.push_back(csv::number(enhancement));
  row.push_back(csv::number(opts.target_car));
  row.push_back(csv::number(fixed_car));
  row.push_back(join_notes(notes));

  std::ostringstream text;
  csv::write_row(text, header(kRunColumns));
  csv::write_row(text, row);
  CommandResult result = emit(destination(opts, &sc), text.str(), sidecar_for(sc, "run", opts), console);
  result.warnings = notes;
  return result;
}

CommandResult cmd_sweep(const CommandOptions& opts, std::ostream& console) {
  const Scenario sc = effective_scenario(opts);
  if (!sc.sweep) throw ConfigurationError("sweep: the scenario has no 'sweep' section");
  const std::vector<double> values = sc.sweep->values();
  const unsigned threads = resolve_threads(opts.threads);

  std::ostringstream text;
  csv::write_row(text, header(kSweepColumns));
  CommandResult warnings_only;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const SystemConfig sys = apply_parameter(sc.system, sc.sweep->parameter, values[i]);
    std::vector<std::string> notes;

    CurvePoint point;
    point.swept_value = values[i];
    const auto params = analytic_params(sys);
    const MuxProbabilities mux = analytic_mux_rate(params, sys.routing);
    point.analytic_car = try_value([&] { return mux.car(); });
    point.analytic_rate = mux.coincidence / sys.repetition_period;
    std::optional<double> analytic_g2;
    if (sys.hbt_enabled) {
      const HbtProbabilities hbt = analytic_hbt(params, sys.routing, sys.hbt_detectors);
      if (hbt.herald_a > 0.0 && hbt.herald_b > 0.0) analytic_g2 = hbt.heralded_g2();
    }

    std::vector<std::string> row{csv::number(values[i])};
    if (!opts.analytic_only) {
      const TallyCounters t = run_experiment(sys, stream_seed(sc.seed, i), threads);
      const Estimate coinc = estimate_coincidence_probability(t);
      point.heralded_rate = estimate_heralded_rate(t, sys.repetition_period);
      const auto car = try_estimate([&] { return estimate_car(t); });
      if (car) {
        point.car = *car;
      } else {
        notes.emplace_back("car_undefined");
      }
      if (sys.hbt_enabled) {
        point.g2_0 = try_estimate([&] { return estimate_g2(t, 0, true); });
        point.g2_plus = try_estimate([&] { return estimate_g2(t, +1, true); });
        point.g2_minus = try_estimate([&] { return estimate_g2(t, -1, true); });
      }
      row.push_back(csv::number(coinc.value));
      row.push_back(csv::number(coinc.std_err));
      row.push_back(csv::number(point.heralded_rate.value));
      row.push_back(csv::number(point.heralded_rate.std_err));
      for (const auto& e : {car, point.g2_0, point.g2_plus, point.g2_minus}) {
        row.push_back(value_of(e));
        row.push_back(error_of(e));
      }
    } else {
      row.resize(row.size() + 12);
    }
    row.push_back(csv::number(mux.herald));
    row.push_back(csv::number(mux.coincidence));
    row.push_back(csv::number(point.analytic_rate));
    row.push_back(csv::number(point.analytic_car));
    row.push_back(csv::number(analytic_g2));
    row.push_back(join_notes(notes));
    csv::write_row(text, row);
    for (const auto& n : notes) warnings_only.warnings.push_back(fmt::format("point {}: {}", i, n));
  }

  CommandResult result = emit(destination(opts, &sc), text.str(), sidecar_for(sc, "sweep", opts), console);
  result.warnings = std::move(warnings_only.warnings);
  return result;
}

CommandResult cmd_scaling(const CommandOptions& opts, std::ostream& console) {
  if (opts.max_sources < 1) throw InvalidParameterError("--max-sources must be >= 1");
  std::ostringstream text;
  csv::write_row(text, header(kScalingColumns));
  for (std::size_t n = 1; n <= opts.max_sources; ++n) {
    const ScalingResult r = scaling_with_N({n, opts.stage_transmission, opts.herald_prob});
    std::optional<double> break_even;
    if (n >= 2) break_even = break_even_stage_transmission(n, opts.herald_prob);
    csv::write_row(text, {std::to_string(n), std::to_string(r.stages), csv::number(opts.stage_transmission),
                          csv::number(opts.herald_prob), csv::number(r.rate_factor), csv::number(r.two_photon_gain),
                          csv::number(break_even)});
  }
  json sidecar = {{"stage_transmission", opts.stage_transmission},
                  {"herald_prob_per_source", opts.herald_prob},
                  {"max_sources", opts.max_sources},
                  {"run", run_metadata("scaling", opts)}};
  return emit(destination(opts, nullptr), text.str(), std::move(sidecar), console);
}

CommandResult cmd_fit(const CommandOptions& opts, std::ostream& console) {
  const Scenario sc = effective_scenario(opts);
  if (!opts.data) throw ConfigurationError("fit: --data <csv> with heralded_rate_hz and car columns is required");
  std::ifstream in(*opts.data, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open data file '{}'", opts.data->string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const csv::Table table = csv::parse(buffer.str());
  const std::size_t rate_col = table.column("heralded_rate_hz");
  const std::size_t car_col = table.column("car");

  std::vector<CurvePoint> points;
  for (const auto& row : table.rows) {
    if (row[rate_col].empty() || row[car_col].empty()) continue;  // undefined-CAR rows
    CurvePoint pt;
    try {
      pt.heralded_rate.value = std::stod(row[rate_col]);
      pt.car.value = std::stod(row[car_col]);
    } catch (const std::exception&) {
      throw ParseError(fmt::format("fit data: non-numeric value in row '{}'", row[rate_col]));
    }
    points.push_back(pt);
  }

  const CarCurveModel model{analytic_params(sc.system), sc.system.routing, sc.system.repetition_period};
  const SwitchFit fit = fit_switch_transmission(points, model);

  std::ostringstream text;
  csv::write_row(text, header(kFitColumns));
  for (std::size_t i = 0; i < points.size(); ++i) {
    csv::write_row(text, {csv::number(points[i].heralded_rate.value), csv::number(points[i].car.value),
                          csv::number(points[i].car.value + fit.residuals[i]), csv::number(fit.residuals[i]),
                          csv::number(fit.transmission)});
  }
  json sidecar = sidecar_for(sc, "fit", opts);
  sidecar["fit"] = {{"data", opts.data->string()},
                    {"fitted_transmission", fit.transmission},
                    {"sum_squared_residuals", fit.sum_squared_residuals},
                    {"at_lower_bound", fit.at_lower_bound},
                    {"at_upper_bound", fit.at_upper_bound}};
  CommandResult result = emit(destination(opts, nullptr), text.str(), std::move(sidecar), console);
  if (fit.at_upper_bound) result.warnings.emplace_back("fit pinned at upper bound t = 1");
  if (fit.at_lower_bound) result.warnings.emplace_back("fit pinned at lower bound t = 0");
  return result;
}

}  // namespace muxsim::cli
