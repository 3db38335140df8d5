#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace imputebench;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("imputebench_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the binary with stdout/stderr captured to files; returns the exit code.
  int run(const std::string& args) {
    const std::string cmd = std::string("\"") + IMPUTEBENCH_CLI_PATH + "\" " + args + " > \"" + (dir_ / "stdout.txt").string() +
                            "\" 2> \"" + (dir_ / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string path(const std::string& name) const { return "\"" + (dir_ / name).string() + "\""; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, PipelineGenerateAmputeImputeEvaluate) {
  ASSERT_EQ(run("--seed 3 generate --augment false --rows 300 --cols 4 --covariance constant --rho 0.7 --output " + path("truth.csv")), 0);
  const auto truth = csv::readDataset((dir_ / "truth.csv").string());
  EXPECT_EQ(truth.rows(), 300);
  EXPECT_EQ(truth.cols(), 4);
  EXPECT_TRUE(truth.complete());

  ASSERT_EQ(run("--seed 5 ampute --input " + path("truth.csv") + " --pct 0.2 --output " + path("amp.csv")), 0);
  const auto amputed = csv::readDataset((dir_ / "amp.csv").string());
  for (Index j = 0; j < 4; ++j) EXPECT_EQ(amputed.mask().count(j), 60);
  const auto mask = csv::readMask((dir_ / "amp.mask.csv").string());
  EXPECT_EQ(mask, amputed.mask());

  ASSERT_EQ(run("--seed 1 impute --input " + path("amp.csv") + " --method mice --output " + path("done.csv")), 0);
  const auto done = csv::readDataset((dir_ / "done.csv").string());
  EXPECT_TRUE(done.complete());
  EXPECT_TRUE(fs::exists(dir_ / "done.diagnostics.json"));
  for (Index j = 0; j < 4; ++j) {
    for (Index i = 0; i < 300; ++i) {
      if (!amputed.missing(i, j)) {
        EXPECT_NEAR(done.values()(i, j), amputed.values()(i, j), 1e-9);
      }
    }
  }

  ASSERT_EQ(run("evaluate --truth " + path("truth.csv") + " --completed " + path("done.csv") + " --mask " +
                path("amp.mask.csv") + " --output " + path("rmse.csv")),
            0);
  const auto rmse = read("rmse.csv");
  EXPECT_EQ(rmse.substr(0, rmse.find('\n')), "variable,rmse");
  EXPECT_EQ(std::count(rmse.begin(), rmse.end(), '\n'), 5);
}

TEST_F(Cli, ImputeIsDeterministicGivenSeed) {
  ASSERT_EQ(run("--seed 2 generate --augment false --rows 200 --cols 3 --output " + path("t.csv")), 0);
  ASSERT_EQ(run("--seed 2 ampute --input " + path("t.csv") + " --pct 0.1 --output " + path("a.csv")), 0);
  ASSERT_EQ(run("--seed 9 impute --input " + path("a.csv") + " --method hmisc --output " + path("x.csv")), 0);
  ASSERT_EQ(run("--seed 9 impute --input " + path("a.csv") + " --method hmisc --output " + path("y.csv")), 0);
  EXPECT_EQ(read("x.csv"), read("y.csv"));
}

TEST_F(Cli, ExperimentAndReport) {
  {
    std::ofstream cfg(dir_ / "run.cfg");
    cfg << "sampleCount = 1\nsampleSize = 100\nmissingPcts = 0.05, 0.15, 0.25\niterationsPerCell = 2\n"
           "methods = mean, mice\nsynthetic.rows = 300\nsynthetic.p = 3\nsynthetic.augment = off\n";
  }
  ASSERT_EQ(run("--config " + path("run.cfg") + " --out " + path("out") + " experiment"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "scores.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "ranks.csv"));
  fs::remove(dir_ / "out" / "ranks.csv");
  ASSERT_EQ(run("report " + path("out")), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "ranks.csv"));
  EXPECT_NE(read("stdout.txt").find("mice"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("impute --method mice"), 1);  // --input is required
  ASSERT_EQ(run("generate --augment false --rows 20 --cols 2 --output " + path("t.csv")), 0);
  EXPECT_EQ(run("impute --input " + path("t.csv") + " --method magic --output " + path("o.csv")), 1);
  EXPECT_EQ(run("impute --input " + path("t.csv") + " --method mice --opt cycles=0 --output " + path("o.csv")), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, DataErrorsExitWithTwo) {
  EXPECT_EQ(run("impute --input " + path("absent.csv") + " --method mean --output " + path("o.csv")), 2);
  {
    std::ofstream bad(dir_ / "bad.csv");
    bad << "a,b\n1,x\n";
  }
  EXPECT_EQ(run("impute --input " + path("bad.csv") + " --method mean --output " + path("o.csv")), 2);
  EXPECT_EQ(run("report " + path("nothing_here")), 2);
  ASSERT_EQ(run("generate --augment false --rows 20 --cols 2 --output " + path("t.csv")), 0);
  EXPECT_EQ(run("ampute --input " + path("t.csv") + " --pct 1.5 --output " + path("o.csv")), 2);
  EXPECT_FALSE(read("stderr.txt").empty());
}

TEST_F(Cli, NumericErrorsExitWithThree) {
  // Equicorrelation -0.9 over three columns is not positive semi-definite.
  EXPECT_EQ(run("generate --augment false --rows 20 --cols 3 --covariance constant --rho -0.9 --output " + path("o.csv")), 3);
}
