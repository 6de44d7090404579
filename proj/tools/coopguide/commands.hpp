#pragma once

#include "coop/evaluation.hpp"
#include "coop/scenario.hpp"

#include <string>
#include <vector>

namespace coop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitScenarioFailure = 2;

/// Output directory used when --out is not given: $COOPGUIDE_OUT_DIR, else "coopguide_out".
std::string default_out_dir();

struct RunOutcome {
  EventLog log;
  ErrorReport report;
};

RunOutcome run_and_evaluate(const ScenarioConfig& config);

/// Writes run.log, report.txt, errors.csv and effective_config.yaml into `dir`.
void write_run_outputs(const std::string& dir, const ScenarioConfig& config, const RunOutcome& run);

struct SweepSpec {
  std::string parameter;  ///< dotted config path, e.g. vio.drift.velocity.x
  std::vector<double> values;
  int runs_per_value = 1;
};

struct SweepRow {
  double value = 0.0;
  int run = 0;
  double mean_path_deviation = 0.0;
  double rel_loc_rmse = 0.0;
  bool failed = false;
};

/// One scenario per (value, run); run r uses seed base_seed + r. Rows are
/// ordered by value then run regardless of `jobs`.
std::vector<SweepRow> run_sweep(const std::string& yaml_text, const SweepSpec& spec,
                                const std::vector<ConfigOverride>& overrides, int jobs);

/// Columns value,run,mean_path_deviation,rel_loc_rmse,failed.
std::string format_sweep_csv(const std::vector<SweepRow>& rows);

/// "key=value" → ConfigOverride. Throws Error when '=' is missing.
ConfigOverride parse_override(const std::string& text);

/// "start:stop:step" inclusive of stop (within half a step).
std::vector<double> parse_range(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

int cmd_run(const std::string& config_path, const std::vector<ConfigOverride>& overrides,
            const std::string& out_dir);
int cmd_sweep(const std::string& config_path, const SweepSpec& spec,
              const std::vector<ConfigOverride>& overrides, const std::string& out_dir, int jobs);
int cmd_eval(const std::string& log_path, const std::string& csv_path);
int cmd_eval_trajectories(const std::string& estimate_csv, const std::string& truth_csv,
                          double window);

}  // namespace coop::cli
