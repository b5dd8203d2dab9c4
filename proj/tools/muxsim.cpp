// muxsim: heralded single-photon source multiplexing simulator.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "muxsim/commands.hpp"

namespace {

std::string column_list(std::span<const std::string_view> columns) {
  std::string out;
  for (auto c : columns) out += (out.empty() ? "" : ",") + std::string(c);
  return out;
}

void report_error(std::string_view category, std::string_view message) {
  nlohmann::json err = {{"error", category}, {"message", message}};
  std::cerr << err.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  using namespace muxsim;
  cli::CommandOptions opts;
  std::string scenario;
  std::string out;
  std::string data;
  std::uint64_t seed = 0;
  std::uint64_t pulses = 0;
  double target_car = 0.0;

  CLI::App app{"Monte Carlo and exact-model simulator for spatially multiplexed heralded single-photon sources"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario, "Scenario JSON file (schema_version 1)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed (overrides the scenario)");
    sub->add_option("--pulses", pulses, "Pump pulses per run (overrides the scenario)");
    sub->add_option("--out", out, "CSV output path; a JSON sidecar is written next to it");
    sub->add_option("--threads", opts.threads, "Worker threads (0 = all cores); tallies do not depend on it");
    sub->add_flag("--analytic-only", opts.analytic_only, "Skip Monte Carlo; emit exact-model columns only");
    sub->add_flag("--hbt", opts.hbt, "Enable the 50/50 HBT tap (g2 estimates)");
  };

  CLI::App* run = app.add_subcommand("run", "Simulate one scenario and emit a one-row summary");
  add_common(run);
  run->add_option("--target-car", target_car, "Also report the rate enhancement at this fixed CAR");
  run->footer("Columns: " + column_list(cli::run_columns()));

  CLI::App* sweep = app.add_subcommand("sweep", "Scan the scenario's sweep parameter and emit a CAR/rate curve");
  add_common(sweep);
  sweep->footer("Columns: " + column_list(cli::sweep_columns()) +
                "\nRates in counts/s (_hz); p_* are per-pulse probabilities. Empty fields are undefined estimates.");

  CLI::App* scaling = app.add_subcommand("scaling", "Rate and two-photon gain of N multiplexed sources");
  add_common(scaling);
  scaling->add_option("--stage-transmission", opts.stage_transmission, "Per-stage switch transmission")
      ->check(CLI::Range(0.0, 1.0));
  scaling->add_option("--herald-prob", opts.herald_prob, "Herald probability per source per pulse (0 = limit)")
      ->check(CLI::Range(0.0, 1.0));
  scaling->add_option("--max-sources", opts.max_sources, "Largest N to tabulate")->check(CLI::PositiveNumber);
  scaling->footer("Columns: " + column_list(cli::scaling_columns()));

  CLI::App* fit = app.add_subcommand("fit", "Fit the common switch transmission to measured CAR-vs-rate data");
  add_common(fit);
  fit->add_option("--data", data, "CSV with heralded_rate_hz and car columns (e.g. sweep output)")
      ->check(CLI::ExistingFile);
  fit->footer("Columns: " + column_list(cli::fit_columns()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (!scenario.empty()) opts.scenario = scenario;
  if (!out.empty()) opts.out = out;
  if (!data.empty()) opts.data = data;
  for (CLI::App* sub : {run, sweep, scaling, fit}) {
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--pulses")) opts.pulses = pulses;
  }
  if (run->count("--target-car")) opts.target_car = target_car;

  try {
    cli::CommandResult result;
    if (*run) {
      result = cli::cmd_run(opts, std::cout);
    } else if (*sweep) {
      result = cli::cmd_sweep(opts, std::cout);
    } else if (*scaling) {
      result = cli::cmd_scaling(opts, std::cout);
    } else {
      result = cli::cmd_fit(opts, std::cout);
    }
    for (const auto& w : result.warnings) {
      std::cerr << nlohmann::json{{"warning", w}}.dump() << '\n';
    }
    for (const auto& f : result.files) std::cerr << "wrote " << f.string() << '\n';
    return 0;
  } catch (const Error& e) {
    report_error(to_string(e.category()), e.what());
    return cli::exit_status(e.category());
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
}
