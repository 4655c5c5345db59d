#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = COHORTPLAT_CLI;
const std::string kConfigs = COHORTPLAT_CONFIGS;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("cohortplat_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >" + (dir_ / "stdout.txt").string() + " 2>" +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string out(const std::string& name) { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesDumpAndSummary) {
  ASSERT_EQ(run("simulate --config " + kConfigs + "/bayes_example.json --seed 4 --out " + out("a")), 0);
  const auto stdout_text = read(dir_ / "stdout.txt");
  EXPECT_NE(stdout_text.find("Total_N: "), std::string::npos);
  const auto dump = read(dir_ / "a" / "trajectory.json");
  const auto j = nlohmann::json::parse(dump);
  EXPECT_LE(j["Trial_Overview"]["Cohort_Summary"].size(), 5u);
  ASSERT_EQ(run("simulate --config " + kConfigs + "/bayes_example.json --seed 4 --out " + out("b")), 0);
  EXPECT_EQ(read(dir_ / "b" / "trajectory.json"), dump);
}

TEST_F(CliTest, InvalidSpecExitsTwoWithoutFiles) {
  std::ofstream(dir_ / "bad.json") << R"({"efficacy": {}})";
  EXPECT_EQ(run("simulate --config " + out("bad.json") + " --out " + out("o1")), 2);
  EXPECT_FALSE(fs::exists(dir_ / "o1"));
  EXPECT_EQ(run("ocs --config " + out("bad.json") + " --out " + out("o2")), 2);
  EXPECT_FALSE(fs::exists(dir_ / "o2"));
  EXPECT_NE(read(dir_ / "stderr.txt").find("config error"), std::string::npos);
}

TEST_F(CliTest, OcsTenIterationsHasAllColumns) {
  ASSERT_EQ(run("ocs --quiet --config " + kConfigs + "/bayes_example.json --iterations 10 --out " + out("o")), 0);
  const auto csv = read(dir_ / "o" / "ocs.csv");
  EXPECT_NE(csv.find("Disj_Power"), std::string::npos);
  EXPECT_NE(csv.find("Avg_Pat_Plac_Pool"), std::string::npos);
  const auto j = nlohmann::json::parse(read(dir_ / "o" / "ocs.json"));
  EXPECT_EQ(j["iterations"].get<int>(), 10);
  const double disj = j["ocs"]["Disj_Power"].get<double>();
  EXPECT_GE(disj, 0.0);
  EXPECT_LE(disj, 1.0);
  EXPECT_EQ(j["dists"]["Dist_PTP"].size(), 10u);
  const auto m = nlohmann::json::parse(read(dir_ / "o" / "manifest.json"));
  EXPECT_EQ(m["status"], "ok");
}

TEST_F(CliTest, WorkerCountDoesNotChangeOutputs) {
  const std::string base = "ocs --quiet --config " + kConfigs + "/bayes_example.json --iterations 40 --seed 9 ";
  ASSERT_EQ(run(base + "--workers 1 --dump-trajectories 3 --out " + out("w1")), 0);
  ASSERT_EQ(run(base + "--workers 8 --dump-trajectories 3 --out " + out("w8")), 0);
  for (const char* f : {"ocs.csv", "ocs.json", "manifest.json", "trajectories/trial_0.json", "trajectories/trial_2.json"})
    EXPECT_EQ(read(dir_ / "w1" / f), read(dir_ / "w8" / f)) << f;
  EXPECT_FALSE(fs::exists(dir_ / "w1" / "trajectories" / "trial_3.json"));
}

TEST_F(CliTest, FormatSelection) {
  ASSERT_EQ(run("ocs --quiet --config " + kConfigs + "/bayes_example.json --iterations 3 --format json --out " +
                out("f")),
            0);
  EXPECT_TRUE(fs::exists(dir_ / "f" / "ocs.json"));
  EXPECT_FALSE(fs::exists(dir_ / "f" / "ocs.csv"));
  EXPECT_EQ(run("ocs --quiet --config " + kConfigs + "/bayes_example.json --format xml --out " + out("g")), 2);
}

TEST_F(CliTest, GridEchoesAxes) {
  ASSERT_EQ(run("grid --quiet --config " + kConfigs + "/grid_base.json --axes " + kConfigs +
                "/grid_axes.json --iterations 4 --out " + out("g")),
            0);
  std::istringstream csv(read(dir_ / "g" / "grid.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("scenario,cohort_random,n_int,Iterations,", 0), 0u);
  const char* cr[] = {"0.01", "0.02", "0.03"};
  const char* ni[] = {"50", "100", "150", "200"};
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream cells(line);
    std::string id, a, b;
    std::getline(cells, id, ',');
    // the id holds a comma inside quotes
    if (!id.empty() && id.front() == '"')
      while (id.back() != '"' || id.size() == 1) {
        std::string more;
        std::getline(cells, more, ',');
        id += "," + more;
      }
    std::getline(cells, a, ',');
    std::getline(cells, b, ',');
    EXPECT_EQ(a, cr[rows / 4]);
    EXPECT_EQ(b, ni[rows % 4]);
    ++rows;
  }
  EXPECT_EQ(rows, 12);
  EXPECT_TRUE(fs::exists(dir_ / "g" / "scenarios" / "11.csv"));
}

TEST_F(CliTest, GridWithoutAxesMatchesOcs) {
  const std::string cfg = kConfigs + "/bayes_example.json";
  ASSERT_EQ(run("grid --quiet --config " + cfg + " --iterations 5 --out " + out("g")), 0);
  ASSERT_EQ(run("ocs --quiet --config " + cfg + " --iterations 5 --out " + out("o")), 0);
  const auto g = nlohmann::json::parse(read(dir_ / "g" / "grid.json"));
  const auto o = nlohmann::json::parse(read(dir_ / "o" / "ocs.json"));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0]["ocs"], o["ocs"]);
}

TEST_F(CliTest, GridUnknownAxisIsConfigError) {
  std::ofstream(dir_ / "axes.json") << R"({"no_such": [1, 2]})";
  EXPECT_EQ(run("grid --quiet --config " + kConfigs + "/grid_base.json --axes " + out("axes.json") + " --out " +
                out("g")),
            2);
}

TEST_F(CliTest, PlotData) {
  ASSERT_EQ(run("simulate --config " + kConfigs + "/bayes_example.json --out " + out("s")), 0);
  ASSERT_EQ(run("plot-data " + out("s/trajectory.json") + " --out " + out("p")), 0);
  const auto rates = read(dir_ / "p" / "rates.csv");
  EXPECT_EQ(rates.rfind("cohort,arm,n,", 0), 0u);
  EXPECT_TRUE(fs::exists(dir_ / "p" / "pairs.csv"));
  std::ofstream(dir_ / "junk.json") << "{";
  EXPECT_EQ(run("plot-data " + out("junk.json") + " --out " + out("q")), 3);
}
