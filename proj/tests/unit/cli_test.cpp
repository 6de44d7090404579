#include "coopguide/commands.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;
using namespace coop;
using namespace coop::cli;

namespace {

const char* kTiny = R"(seed: 3
primary:
  pattern: square
  center: [0, 0, 2]
  size: 3
  speed: 0.5
desired:
  pattern: circle
  center: [0, 0, 2]
  radius: 4
  speed: 0.5
  laps: 0.05
)";

struct Shell {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("coopguide_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) const {
    const auto p = (dir_ / name).string();
    write_text_file(p, text);
    return p;
  }

  Shell run(const std::string& args) const {
    const auto out = (dir_ / "stdout.txt").string();
    const auto err = (dir_ / "stderr.txt").string();
    const std::string cmd = std::string(COOPGUIDE_EXE) + " " + args + " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    Shell s;
    s.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    s.out = read_text_file(out);
    s.err = read_text_file(err);
    return s;
  }

  fs::path dir_;
};

}  // namespace

TEST(CliParsing, RangeAndOverride) {
  const auto v = parse_range("0:1.0:0.1");
  ASSERT_EQ(v.size(), 11u);
  EXPECT_DOUBLE_EQ(v[3], 0.3);
  EXPECT_DOUBLE_EQ(v.back(), 1.0);
  EXPECT_THROW(parse_range("0:1"), Error);
  EXPECT_THROW(parse_range("1:0:0.1"), Error);
  EXPECT_THROW(parse_range("0:1:0"), Error);

  const auto o = parse_override("vio.drift.velocity.x=0.4");
  EXPECT_EQ(o.path, "vio.drift.velocity.x");
  EXPECT_EQ(o.value, "0.4");
  EXPECT_THROW(parse_override("novalue"), Error);
}

TEST(CliSweep, CardinalityAndOrdering) {
  SweepSpec spec;
  spec.parameter = "vio.drift.velocity.x";
  spec.values = parse_range("0:1.0:0.1");
  spec.runs_per_value = 10;
  const auto rows = run_sweep(kTiny, spec, {}, 2);
  ASSERT_EQ(rows.size(), 110u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(rows[i].value, spec.values[i / 10]);
    EXPECT_EQ(rows[i].run, static_cast<int>(i % 10));
  }
  const std::string csv = format_sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "value,run,mean_path_deviation,rel_loc_rmse,failed");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 111);
}

TEST(CliSweep, ParallelMatchesSerial) {
  SweepSpec spec;
  spec.parameter = "detection.noise";
  spec.values = {0.05, 0.1};
  spec.runs_per_value = 2;
  EXPECT_EQ(format_sweep_csv(run_sweep(kTiny, spec, {}, 1)),
            format_sweep_csv(run_sweep(kTiny, spec, {}, 3)));
  spec.runs_per_value = 0;
  EXPECT_THROW(run_sweep(kTiny, spec, {}, 1), Error);
}

TEST_F(CliTest, RunWritesOutputsAndEvalReproducesTheReport) {
  const auto cfg = std::string(COOP_SCENARIO_DIR) + "/circle.yaml";
  const auto out = (dir_ / "run").string();
  const auto r = run("run --config " + cfg + " --set desired.laps=0.6 --out " + out);
  EXPECT_EQ(r.code, 0) << r.err;
  for (const char* f : {"run.log", "report.txt", "errors.csv", "effective_config.yaml"}) {
    EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
  }
  const std::string report = read_text_file((fs::path(out) / "report.txt").string());
  EXPECT_EQ(r.out, report);

  const auto e = run("eval " + (fs::path(out) / "run.log").string());
  EXPECT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(e.out, report);
  EXPECT_TRUE(fs::exists(fs::path(out) / "run.log.errors.csv"));

  const auto again = (dir_ / "again").string();
  EXPECT_EQ(run("run --config " + cfg + " --set desired.laps=0.6 --out " + again).code, 0);
  EXPECT_EQ(read_text_file((fs::path(again) / "run.log").string()),
            read_text_file((fs::path(out) / "run.log").string()));

  const auto eff = load_scenario((fs::path(out) / "effective_config.yaml").string());
  EXPECT_DOUBLE_EQ(eff.desired.laps, 0.6);
}

TEST_F(CliTest, MissingFieldExitsOneNamingIt) {
  const auto cfg = write("bad.yaml", "primary:\n  pattern: static\n");
  const auto r = run("run --config " + cfg + " --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("desired"), std::string::npos) << r.err;

  const auto typo = write("typo.yaml", std::string(kTiny) + "vio:\n  rat: 3\n");
  const auto t = run("run --config " + typo + " --out " + (dir_ / "o").string());
  EXPECT_EQ(t.code, 1);
  EXPECT_NE(t.err.find("vio.rat"), std::string::npos) << t.err;

  EXPECT_EQ(run("run").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
}

TEST_F(CliTest, ScenarioFailureExitsTwo) {
  const auto cfg = write("tiny.yaml", kTiny);
  // Never guided inside this short run: the run is flagged failed.
  const auto r = run("run --config " + cfg + " --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_NE(r.out.find("failure=1"), std::string::npos);
}

TEST_F(CliTest, TruncatedLogExitsOneWithLineNumber) {
  const auto cfg = write("tiny.yaml", kTiny);
  const auto out = (dir_ / "o").string();
  run("run --config " + cfg + " --out " + out);
  const std::string log = read_text_file((fs::path(out) / "run.log").string());
  const auto cut = write("cut.log", log.substr(0, log.size() / 2));
  const auto r = run("eval " + cut);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line"), std::string::npos) << r.err;
}

TEST_F(CliTest, SweepWritesCsvAndHonoursOutDirEnv) {
  const auto cfg = write("tiny.yaml", kTiny);
  const auto env_out = (dir_ / "env_out").string();
  const std::string cmd = "COOPGUIDE_OUT_DIR=" + env_out + " " + COOPGUIDE_EXE + " sweep --config " + cfg +
                          " --param detection.noise --range 0:0.1:0.05 --runs 2 >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  EXPECT_TRUE(WIFEXITED(status));
  const std::string csv = read_text_file((fs::path(env_out) / "sweep.csv").string());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_TRUE(fs::exists(fs::path(env_out) / "effective_config.yaml"));
}

TEST_F(CliTest, EvalTrajectoryPair) {
  std::string truth = "t,x,y,z\n";
  std::string est = "t,x,y,z\n";
  for (int i = 0; i <= 300; ++i) {
    const double t = 0.1 * i;
    truth += std::to_string(t) + "," + std::to_string(std::cos(0.1 * t)) + "," +
             std::to_string(std::sin(0.1 * t)) + ",2\n";
    est += std::to_string(t) + "," + std::to_string(std::cos(0.1 * t) + 1.0) + "," +
           std::to_string(std::sin(0.1 * t)) + ",2.3\n";
  }
  const auto a = write("est.csv", est);
  const auto b = write("truth.csv", truth);
  const auto r = run("eval --estimate " + a + " --truth " + b);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ate_3d="), std::string::npos);
  EXPECT_EQ(run("eval --estimate " + a).code, 1);
}
