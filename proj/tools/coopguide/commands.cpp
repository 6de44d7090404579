#include "commands.hpp"

#include "coop/simulator.hpp"

#include <fmt/format.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace coop::cli {

namespace fs = std::filesystem;

std::string default_out_dir() {
  if (const char* env = std::getenv("COOPGUIDE_OUT_DIR"); env && *env) {
    return env;
  }
  return "coopguide_out";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot read '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write '" + path + "'");
  }
  out << text;
}

RunOutcome run_and_evaluate(const ScenarioConfig& config) {
  RunOutcome out;
  out.log = run_scenario(config);
  out.report = evaluate(out.log);
  return out;
}

void write_run_outputs(const std::string& dir, const ScenarioConfig& config, const RunOutcome& run) {
  fs::create_directories(dir);
  const fs::path d(dir);
  write_text_file((d / "run.log").string(), serialize_event_log(run.log));
  write_text_file((d / "report.txt").string(), format_report(run.report));
  write_text_file((d / "errors.csv").string(), format_sample_csv(run.report.per_sample_errors));
  write_text_file((d / "effective_config.yaml").string(), dump_scenario(config));
}

ConfigOverride parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error("override '" + text + "' must look like key=value");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

std::vector<double> parse_range(const std::string& text) {
  double a = 0.0;
  double b = 0.0;
  double s = 0.0;
  char c1 = 0;
  char c2 = 0;
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  if (!(in >> a >> c1 >> b >> c2 >> s) || c1 != ':' || c2 != ':' || !(s > 0.0) || b < a) {
    throw Error("range '" + text + "' must look like start:stop:step with step > 0");
  }
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((b - a) / s + 0.5));
  for (long i = 0; i <= n; ++i) {
    // Round to 12 significant digits so 0.1 steps print as 0.3, not 0.30000000000000004.
    out.push_back(std::stod(fmt::format("{:.12g}", a + static_cast<double>(i) * s)));
  }
  return out;
}

std::vector<SweepRow> run_sweep(const std::string& yaml_text, const SweepSpec& spec,
                                const std::vector<ConfigOverride>& overrides, int jobs) {
  if (spec.runs_per_value < 1) {
    throw Error("sweep: runs per value must be >= 1");
  }
  if (spec.values.empty()) {
    throw Error("sweep: no values");
  }
  for (double v : spec.values) {
    if (!std::isfinite(v)) throw Error("sweep: values must be finite");
  }
  const ScenarioConfig base = parse_scenario(yaml_text, overrides);

  struct Job {
    ScenarioConfig config;
    SweepRow row;
  };
  std::vector<Job> work;
  for (double v : spec.values) {
    for (int r = 0; r < spec.runs_per_value; ++r) {
      std::vector<ConfigOverride> ov = overrides;
      ov.push_back({spec.parameter, fmt::format("{}", v)});
      ov.push_back({"seed", fmt::format("{}", base.seed + static_cast<std::uint64_t>(r))});
      Job j{parse_scenario(yaml_text, ov), {}};
      validate(j.config);
      j.row.value = v;
      j.row.run = r;
      work.push_back(std::move(j));
    }
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      try {
        const RunOutcome run = run_and_evaluate(work[i].config);
        work[i].row.mean_path_deviation = run.report.mean_path_deviation;
        work[i].row.rel_loc_rmse = run.report.rel_loc_rmse;
        work[i].row.failed = run.report.failure;
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(work.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  std::vector<SweepRow> rows;
  rows.reserve(work.size());
  for (const auto& j : work) rows.push_back(j.row);
  return rows;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "value,run,mean_path_deviation,rel_loc_rmse,failed\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{}\n", r.value, r.run, r.mean_path_deviation, r.rel_loc_rmse,
                       r.failed ? 1 : 0);
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::vector<ConfigOverride>& overrides,
            const std::string& out_dir) {
  ScenarioConfig config;
  try {
    config = load_scenario(config_path, overrides);
    validate(config);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  const RunOutcome run = run_and_evaluate(config);
  write_run_outputs(out_dir, config, run);
  std::cout << format_report(run.report);
  return run.report.failure ? kExitScenarioFailure : kExitOk;
}

int cmd_sweep(const std::string& config_path, const SweepSpec& spec,
              const std::vector<ConfigOverride>& overrides, const std::string& out_dir, int jobs) {
  std::string text;
  std::vector<SweepRow> rows;
  try {
    text = read_text_file(config_path);
    const ScenarioConfig probe = parse_scenario(text, overrides);
    validate(probe);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    rows = run_sweep(text, spec, overrides, jobs);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  fs::create_directories(out_dir);
  const std::string csv = format_sweep_csv(rows);
  write_text_file((fs::path(out_dir) / "sweep.csv").string(), csv);
  write_text_file((fs::path(out_dir) / "effective_config.yaml").string(),
                  dump_scenario(parse_scenario(text, overrides)));
  std::cout << csv;
  for (const auto& r : rows) {
    if (r.failed) return kExitScenarioFailure;
  }
  return kExitOk;
}

int cmd_eval(const std::string& log_path, const std::string& csv_path) {
  EventLog log;
  try {
    log = load_event_log(log_path);
  } catch (const Error& e) {
    std::cerr << "log error: " << e.what() << "\n";
    return kExitConfigError;
  }
  const ErrorReport report = evaluate(log);
  std::cout << format_report(report);
  write_text_file(csv_path, format_sample_csv(report.per_sample_errors));
  return report.failure ? kExitScenarioFailure : kExitOk;
}

int cmd_eval_trajectories(const std::string& estimate_csv, const std::string& truth_csv,
                          double window) {
  try {
    const Trajectory est = load_trajectory_csv(estimate_csv);
    const Trajectory gt = load_trajectory_csv(truth_csv);
    const auto ate =
        absolute_trajectory_error(apply_alignment(est, align_first_window(est, gt, window)), gt);
    std::cout << fmt::format("ate_2d={}\nate_3d={}\nsamples={}\n", ate.ate_2d, ate.ate_3d,
                             ate.samples);
  } catch (const Error& e) {
    std::cerr << "eval error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitOk;
}

}  // namespace coop::cli
