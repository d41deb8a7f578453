#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.h"
#include "quaysim/controller.h"
#include "quaysim/scenario_io.h"
#include "test_scenarios.h"

namespace quaysim {
namespace {

namespace fs = std::filesystem;

const char* kSmallScenario = R"({
  "run": {"duration_s": 0.5, "seed": 5},
  "cluster": {"workers": [{"id": 0, "cores": 4}]},
  "chains": [{"id": 3, "name": "fw_nat", "slo_p99_us": 100, "load_threshold": 0.6, "max_rate_pps": 400000,
              "nfs": [{"name": "fw", "cycles": 900}, {"name": "nat", "cycles": 700}]}],
  "traffic": {"flow_rate": 60, "ramp_s": 0.1, "flow_duration_mean_s": 0.3, "pps_min": 2000, "pps_max": 8000,
              "sizes": [{"bytes": 64, "weight": 1}, {"bytes": 1500, "weight": 1}]}
})";

const char* kProfileScenario = R"({
  "run": {"duration_s": 1, "seed": 5},
  "cluster": {"workers": [{"id": 0, "cores": 2}]},
  "chains": [{"id": 0, "name": "pair", "slo_p99_us": 100,
              "nfs": [{"name": "a", "cycles": 6000}, {"name": "b", "cycles": 6000}]}],
  "traffic": {"flow_rate": 5, "pps_min": 2000, "pps_max": 4000},
  "profile": {"warmup_ms": 20, "hold_ms": 60}
})";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("quaysim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }
  int cli(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run_cli(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, RunWritesOutputs) {
  const auto path = write("s.json", kSmallScenario);
  const auto out = (dir_ / "out").string();
  ASSERT_EQ(cli({"run", path, "--out", out}), cli::kOk) << err_.str();
  for (const char* f : {"metrics.json", "metrics.csv", "summary.txt", "rounds.csv", "flow_table.csv",
                        "cores.csv", "pool.csv", "faults.csv", "scenario.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
  }
  EXPECT_EQ(slurp(fs::path(out) / "summary.txt") + "outputs written to " + out + "\n", out_.str());
  EXPECT_EQ(slurp(fs::path(out) / "rounds.csv").rfind(
                "round_id,chain_id,core_id,start_ns,end_ns,packets,copies,ctx_switches,busy_cycles\n", 0),
            0u);
}

TEST_F(CliTest, SameSeedByteIdenticalMetrics) {
  const auto path = write("s.json", kSmallScenario);
  ASSERT_EQ(cli({"run", path, "--out", (dir_ / "a").string(), "--seed", "11"}), cli::kOk);
  ASSERT_EQ(cli({"run", path, "--out", (dir_ / "b").string(), "--seed", "11"}), cli::kOk);
  ASSERT_EQ(cli({"run", path, "--out", (dir_ / "c").string(), "--seed", "12"}), cli::kOk);
  EXPECT_EQ(slurp(dir_ / "a" / "metrics.json"), slurp(dir_ / "b" / "metrics.json"));
  EXPECT_NE(slurp(dir_ / "a" / "metrics.json"), slurp(dir_ / "c" / "metrics.json"));
  EXPECT_NE(slurp(dir_ / "a" / "metrics.json").find("\"seed\": 11"), std::string::npos);
}

TEST_F(CliTest, MalformedFileIsValidationErrorWithLine) {
  const auto path = write("bad.json", "{\n  \"run\": {\"duration_s\": 1,,}\n}\n");
  EXPECT_EQ(cli({"run", path, "--out", (dir_ / "o").string()}), cli::kValidation);
  EXPECT_NE(err_.str().find("line 2"), std::string::npos) << err_.str();
}

TEST_F(CliTest, UnknownKeyRejected) {
  const auto path = write("bad.json", R"({"cluster": {"workers": [{"id": 0, "cores": 1, "colour": 3}]}})");
  EXPECT_EQ(cli({"run", path}), cli::kValidation);
  EXPECT_NE(err_.str().find("colour"), std::string::npos) << err_.str();
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(cli({}), cli::kUsage);
  EXPECT_EQ(cli({"frobnicate"}), cli::kUsage);
  EXPECT_EQ(cli({"batch-calc", "--n", "5"}), cli::kUsage);
}

TEST_F(CliTest, MissingFileIsValidationError) {
  EXPECT_EQ(cli({"run", (dir_ / "nope.json").string()}), cli::kValidation);
}

TEST_F(CliTest, BatchCalcExample) {
  ASSERT_EQ(cli({"batch-calc", "--n", "5", "--cycles", "509"}), cli::kOk);
  EXPECT_NE(out_.str().find("B_v_closed_form 3\n"), std::string::npos);
  EXPECT_NE(out_.str().find("B_v_scan 3\n"), std::string::npos);
  ASSERT_EQ(cli({"batch-calc", "--n", "5", "--cycles", "509", "--t-ctx", "0"}), cli::kOk);
  EXPECT_NE(out_.str().find("B_v_closed_form 1\n"), std::string::npos);
  EXPECT_EQ(cli({"batch-calc", "--n", "5", "--cycles", "509", "--p", "1.5"}), cli::kValidation);
}

TEST_F(CliTest, SeedFromEnvironment) {
  const auto path = write("s.json", kSmallScenario);
  ::setenv("QUAYSIM_SEED", "31", 1);
  const int rc = cli({"run", path, "--out", (dir_ / "e").string()});
  ::unsetenv("QUAYSIM_SEED");
  ASSERT_EQ(rc, cli::kOk);
  EXPECT_NE(slurp(dir_ / "e" / "metrics.json").find("\"seed\": 31"), std::string::npos);
}

TEST_F(CliTest, ProfileSixteenRowsAndSelection) {
  const auto path = write("p.json", kProfileScenario);
  const auto out = (dir_ / "p").string();
  ASSERT_EQ(cli({"profile", path, "--chain", "0", "--out", out}), cli::kOk) << err_.str();
  std::ifstream f(fs::path(out) / "profile_chain0.csv");
  const ProfileCurve curve = ProfileCurve::read_csv(f);
  ASSERT_EQ(curve.rows.size(), 16u);
  for (std::size_t i = 1; i < curve.rows.size(); ++i) EXPECT_LE(curve.rows[i - 1].p99, curve.rows[i].p99);
  const auto choice = pick_load_threshold(curve, micros(100));
  EXPECT_NE(out_.str().find(": " + format_number(choice.threshold_pct) + "%"), std::string::npos) << out_.str();
  EXPECT_EQ(cli({"profile", path, "--chain", "9", "--out", out}), cli::kValidation);
}

TEST_F(CliTest, SweepLoadThresholdMatchesProfileShape) {
  const auto path = write("p.json", kProfileScenario);
  const auto out = (dir_ / "sw").string();
  ASSERT_EQ(cli({"sweep", path, "--param", "load_threshold", "--values", "10,20,30", "--out", out}), cli::kOk);
  std::ifstream f(fs::path(out) / "sweep_load_threshold.csv");
  EXPECT_EQ(ProfileCurve::read_csv(f).rows.size(), 3u);
  EXPECT_EQ(cli({"sweep", path, "--param", "colour", "--values", "1"}), cli::kValidation);
}

TEST_F(CliTest, SweepChainLengthThroughputDecreases) {
  const auto path = write("p.json", kProfileScenario);
  const auto out = (dir_ / "cl").string();
  ASSERT_EQ(cli({"sweep", path, "--param", "chain_length", "--values", "1,2,3,4,5,6,7", "--out", out}),
            cli::kOk);
  std::ifstream f(fs::path(out) / "sweep_chain_length.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "chain_length,seed,batch_multiplier,rate_pps");
  double prev = 1e18;
  int rows = 0;
  while (std::getline(f, line)) {
    const double rate = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_LT(rate, prev) << line;
    prev = rate;
    ++rows;
  }
  EXPECT_EQ(rows, 7);
}

TEST(ScenarioIo, RoundTrip) {
  Scenario s = testing::fixed_scenario(testing::uniform_chain(2, 3, 700));
  s.cluster.chains[0].nfs[1].stateful = true;
  s.cluster.chains[0].nfs[2].service_cost.per_byte_cycles = 1.25;
  s.cluster.chains[0].filter.dst_prefix = 0x0A000000u;
  s.cluster.chains[0].filter.dst_len = 8;
  s.cluster.chains[0].filter.proto = 17;
  s.traffic.flow_rate = 3.5;
  s.traffic.sizes = {{64, 2}, {1500, 1}};
  s.traffic.static_flows.push_back(testing::static_flow(4, millis(3), seconds(2), 1234.5, 256));
  s.cluster.state.sync_period = millis(50);
  s.cluster.profile.thresholds_pct = {20, 40, 60};
  s.output.keep_rounds = true;
  s.seed = 123456789012345ULL;
  EXPECT_EQ(parse_scenario(dump_scenario(s)), s);
}

TEST(ScenarioIo, ValidationErrorsNamePath) {
  try {
    parse_scenario(R"({"cluster": {"workers": [{"id": 0}]}, "chains": [{"id": 0, "nfs": [{"name": "x"}]}]})");
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("cycles"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace quaysim
