#include <gtest/gtest.h>

#include <filesystem>
#include <regex>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "cli.hpp"
#include "evsched/report.hpp"

namespace evsched::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           fmt::format("evsched_cli_{}", ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Default scenario with absolute input paths and the given overrides.
  fs::path config(const nlohmann::json& patch) {
    nlohmann::json doc =
        nlohmann::json::parse(read_text_file(EVSCHED_DATA_DIR "/default_scenario.json"));
    doc["feeder"] = EVSCHED_DATA_DIR "/ieee13.json";
    doc["load_profile"] = EVSCHED_DATA_DIR "/residential_profile.csv";
    doc.merge_patch(patch);
    const fs::path p = dir_ / "scenario.json";
    write_text(p, doc.dump(2));
    return p;
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "evsched");
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    return main_entry(static_cast<int>(argv.size()), argv.data());
  }

  fs::path dir_;
};

TEST(SeedList, Parses) {
  EXPECT_EQ(parse_seed_list("3"), (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(parse_seed_list("1,2,5-8"), (std::vector<std::uint64_t>{1, 2, 5, 6, 7, 8}));
  for (const char* bad : {"", "a", "1,", "5-3", "1--2", "-4"}) {
    EXPECT_THROW(parse_seed_list(bad), Error) << bad;
  }
}

TEST(ExitCodes, FollowErrorKinds) {
  EXPECT_EQ(exit_code_for(ErrorKind::kConfig), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorKind::kTopology), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorKind::kBaseLoadInfeasible), kExitInfeasible);
  EXPECT_EQ(exit_code_for(ErrorKind::kInfeasibleConfig), kExitInfeasible);
  EXPECT_EQ(exit_code_for(ErrorKind::kInvariantViolation), kExitInternal);
  EXPECT_EQ(exit_code_for(ErrorKind::kIterationLimit), kExitInternal);
}

TEST_F(CliTest, EmptyArrivalSweepSummarizesEverySeed) {
  const fs::path cfg = config({{"arrivals", {{"rate", 0.0}}}});
  ::testing::internal::CaptureStdout();
  const int rc = run({"run", "--config", cfg.string(), "--out", (dir_ / "out").string(),
                      "--seeds", "1-100"});
  ::testing::internal::GetCapturedStdout();
  ASSERT_EQ(rc, kExitOk);
  const nlohmann::json s = nlohmann::json::parse(read_text_file(dir_ / "out" / "summary.json"));
  EXPECT_EQ(s["schema"], "evsched.summary");
  EXPECT_EQ(s["seed_count"], 100);
  ASSERT_EQ(s["seeds"].size(), 100u);
  EXPECT_EQ(s["total_profit"].get<double>(), 0.0);
  for (const auto& r : s["seeds"]) {
    EXPECT_EQ(r["profit"].get<double>(), 0.0);
    EXPECT_EQ(r["audit_violations"], 0);
  }
  EXPECT_EQ(s["solve_ms"]["count"], 2400);
  EXPECT_LE(s["solve_ms"]["min"].get<double>(), s["solve_ms"]["median"].get<double>());
  EXPECT_LE(s["solve_ms"]["median"].get<double>(), s["solve_ms"]["max"].get<double>());
  for (const char* f : {"intervals.csv", "pevs.csv", "traces.csv", "day.json", "timings.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "out" / "seed_37" / f)) << f;
  }
}

TEST_F(CliTest, RunWritesReportsForArrivals) {
  const fs::path cfg = config(nlohmann::json::object());
  ::testing::internal::CaptureStdout();
  const int rc =
      run({"run", "--config", cfg.string(), "--out", (dir_ / "out").string(), "--seeds", "1,2"});
  ::testing::internal::GetCapturedStdout();
  ASSERT_EQ(rc, kExitOk);
  const nlohmann::json day =
      nlohmann::json::parse(read_text_file(dir_ / "out" / "seed_2" / "day.json"));
  EXPECT_GT(day["admitted"].get<int>(), 0);
  EXPECT_EQ(day["fulfilled"], day["admitted"]);
}

TEST_F(CliTest, MissingConfigNamesThePath) {
  const std::string missing = (dir_ / "nope.json").string();
  ::testing::internal::CaptureStderr();
  const int rc = run({"validate", "--config", missing});
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_EQ(rc, kExitConfig);
  EXPECT_NE(err.find(missing), std::string::npos) << err;
}

TEST_F(CliTest, MalformedConfigIsAConfigError) {
  const fs::path p = dir_ / "broken.json";
  write_text(p, "{ \"feeder\": ");
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"validate", "--config", p.string()}), kExitConfig);
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("broken.json:1:"), std::string::npos) << err;
}

TEST_F(CliTest, UnknownFlagIsAParseError) {
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"run", "--bogus"}), kExitConfig);
  ::testing::internal::GetCapturedStderr();
}

TEST_F(CliTest, ValidateReportsOverload) {
  const fs::path cfg = config(nlohmann::json::object());
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"validate", "--config", cfg.string()}), kExitOk);
  EXPECT_EQ(run({"validate", "--config", cfg.string(), "--load-scale", "10"}), kExitInfeasible);
  const std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("violation: "), std::string::npos);
}

TEST_F(CliTest, ZeroLoadHoldsSubstationVoltage) {
  const fs::path cfg = config({{"load_scale", 0.0}});
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(cmd_validate(cfg, -1.0), kExitOk);
  const std::string out = ::testing::internal::GetCapturedStdout();
  const std::regex row(R"(^\s*\d+\s+1\.000000\s+\d+\s+1\.000000$)");
  std::istringstream is(out);
  std::size_t rows = 0;
  for (std::string line; std::getline(is, line);) rows += std::regex_match(line, row);
  EXPECT_EQ(rows, 24u) << out;
}

TEST_F(CliTest, DumpMilpWritesTheProblem) {
  const fs::path cfg = config(nlohmann::json::object());
  const fs::path out = dir_ / "k3.lp";
  EXPECT_EQ(run({"dump-milp", "--config", cfg.string(), "--seed", "4", "--interval", "3", "--out",
                 out.string()}),
            kExitOk);
  const std::string text = read_text_file(out);
  EXPECT_EQ(text.rfind("\\ evsched-lp 1", 0), 0u);
  EXPECT_NE(text.find("binaries"), std::string::npos);
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"dump-milp", "--config", cfg.string(), "--interval", "99"}), kExitConfig);
  ::testing::internal::GetCapturedStderr();
}

}  // namespace
}  // namespace evsched::cli
