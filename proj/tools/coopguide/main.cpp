#include "commands.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <optional>
#include <thread>

int main(int argc, char** argv) {
  using namespace coop::cli;

  CLI::App app{"coopguide: cooperative LiDAR/VIO relative localization and guidance simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out_dir = default_out_dir();

  auto* run = app.add_subcommand("run", "Run one scenario and evaluate it");
  run->add_option("--config", config_path, "Scenario YAML")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--set", sets, "Config override key=value (repeatable)");
  run->add_option("--out", out_dir, "Output directory (default $COOPGUIDE_OUT_DIR)");

  SweepSpec spec;
  std::vector<double> values;
  std::string range;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* sweep = app.add_subcommand("sweep", "Run a scenario over a list of parameter values");
  sweep->add_option("--config", config_path, "Scenario YAML")->required();
  sweep->add_option("--param", spec.parameter, "Dotted config path to sweep")->required();
  auto* values_opt = sweep->add_option("--values", values, "Parameter values");
  auto* range_opt = sweep->add_option("--range", range, "start:stop:step");
  values_opt->excludes(range_opt);
  sweep->add_option("--runs", spec.runs_per_value, "Runs (seeds) per value")->check(CLI::PositiveNumber);
  sweep->add_option("--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
  sweep->add_option("--set", sets, "Config override key=value (repeatable)");
  sweep->add_option("--out", out_dir, "Output directory (default $COOPGUIDE_OUT_DIR)");

  std::string log_path;
  std::string csv_path;
  std::string estimate_csv;
  std::string truth_csv;
  double window = coop::kAteAlignmentWindow;
  auto* eval = app.add_subcommand("eval", "Evaluate an event log or a pair of trajectory CSVs");
  eval->add_option("log", log_path, "Event log written by 'run'");
  eval->add_option("--csv", csv_path, "Per-sample error CSV (default <log>.errors.csv)");
  eval->add_option("--estimate", estimate_csv, "Estimated trajectory CSV t,x,y,z[,yaw]");
  eval->add_option("--truth", truth_csv, "Ground-truth trajectory CSV t,x,y,z[,yaw]");
  eval->add_option("--window", window, "Alignment window in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfigError;
  }

  try {
    std::vector<coop::ConfigOverride> overrides;
    for (const auto& s : sets) overrides.push_back(parse_override(s));
    if (seed) overrides.push_back({"seed", std::to_string(*seed)});

    if (*run) {
      return cmd_run(config_path, overrides, out_dir);
    }
    if (*sweep) {
      spec.values = range.empty() ? values : parse_range(range);
      return cmd_sweep(config_path, spec, overrides, out_dir, jobs);
    }
    if (!estimate_csv.empty() || !truth_csv.empty()) {
      if (estimate_csv.empty() || truth_csv.empty()) {
        std::cerr << "eval: --estimate and --truth go together\n";
        return kExitConfigError;
      }
      return cmd_eval_trajectories(estimate_csv, truth_csv, window);
    }
    if (log_path.empty()) {
      std::cerr << "eval: give a log path or --estimate/--truth\n";
      return kExitConfigError;
    }
    return cmd_eval(log_path, csv_path.empty() ? log_path + ".errors.csv" : csv_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}
