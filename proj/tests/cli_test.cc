#include "lethe/cli.h"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "lethe/store_server.h"

extern char** environ;

namespace lethe {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lethe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return RunCli(static_cast<int>(argv.size()), argv.data());
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lethe_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("LETHE_SEED");
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string D(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

const std::vector<std::string> kSmallSim = {"--initial-posts", "3000", "--creations-per-day", "20",
                                            "--deletions-per-day", "6", "--horizon-days", "200",
                                            "--theta-days", "20", "--theta-days", "40"};

TEST_F(CliTest, TunePrintsJson) {
  ::testing::internal::CaptureStdout();
  ASSERT_EQ(Cli({"tune", "--availability", "0.95", "--mean-down", "1h", "--theta", "90d"}), kExitOk);
  const auto out = json::parse(::testing::internal::GetCapturedStdout());
  EXPECT_NEAR(out.at("mean_up_seconds").get<double>(), 19 * 3600.0, 1e-6);
  EXPECT_EQ(out.at("mean_down_seconds"), 3600.0);
  EXPECT_NEAR(out.at("shape_n").get<double>(), 2e-4, 1e-4);
  EXPECT_NEAR(out.at("availability").get<double>(), 0.95, 1e-12);
  EXPECT_EQ(out.at("theta_star_seconds"), 90 * 86400);

  ::testing::internal::CaptureStdout();
  ASSERT_EQ(Cli({"tune", "--mean-down-seconds", "3600", "--theta-days", "90", "--availability", "0.95"}), kExitOk);
  EXPECT_EQ(json::parse(::testing::internal::GetCapturedStdout()), out);
}

TEST_F(CliTest, ValidationFailuresExitOne) {
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(Cli({}), kExitValidation);
  EXPECT_EQ(Cli({"frobnicate"}), kExitValidation);
  EXPECT_EQ(Cli({"simulate", "--out-dir", D("x")}), kExitValidation);  // horizon missing
  EXPECT_EQ(Cli({"simulate", "--horizon-days", "10", "--scenario", "sometimes"}), kExitValidation);
  EXPECT_EQ(Cli({"simulate", "--horizon-days", "10", "--theta-days", "30"}), kExitValidation);
  EXPECT_EQ(Cli({"tune", "--availability", "1.5"}), kExitValidation);
  EXPECT_EQ(Cli({"tune", "--mean-down", "1h", "--mean-down-seconds", "3600"}), kExitValidation);
  EXPECT_EQ(Cli({"tune", "--theta", "soon"}), kExitValidation);
  EXPECT_EQ(Cli({"tune", "--bogus"}), kExitValidation);
  ::testing::internal::GetCapturedStderr();
}

TEST_F(CliTest, RuntimeFailureExitsTwo) {
  std::ofstream(D("blocker")) << "file, not a directory";
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(Cli({"hazard-curve", "--out-dir", D("blocker/sub")}), kExitRuntime);
  ::testing::internal::GetCapturedStderr();
}

TEST_F(CliTest, SimulateWritesReportAndManifest) {
  auto args = kSmallSim;
  args.insert(args.end(), {"--engine", "exact", "--scenario", "once", "--seed", "4", "--scale-factor", "1e-3",
                           "--out-dir", D("run")});
  args.insert(args.begin(), "simulate");
  ASSERT_EQ(Cli(args), kExitOk);
  const auto report = json::parse(Slurp(dir_ / "run" / "report.json"));
  EXPECT_EQ(report.at("scenario"), "once");
  EXPECT_EQ(report.at("engine"), "exact");
  EXPECT_EQ(report.at("seed"), 4);
  ASSERT_EQ(report.at("thresholds").size(), 2u);
  const auto& row = report.at("thresholds")[0];
  for (const char* key : {"theta_seconds", "shape_n", "tp", "fp", "fn", "precision", "recall", "fp_scaled"}) {
    EXPECT_TRUE(row.contains(key)) << key;
  }
  EXPECT_DOUBLE_EQ(row.at("fp_scaled").get<double>(), row.at("fp").get<double>() / 1e-3);
  const auto manifest = json::parse(Slurp(dir_ / "run" / "manifest.json"));
  EXPECT_EQ(manifest.at("tool"), "lethe");
  EXPECT_EQ(manifest.at("command"), "simulate");
  EXPECT_EQ(manifest.at("seed"), 4);
  EXPECT_EQ(manifest.at("config").at("horizon_days"), 200);
}

TEST_F(CliTest, SimulateIsReproducibleAcrossThreadCounts) {
  for (const char* threads : {"1", "3"}) {
    auto args = kSmallSim;
    args.insert(args.begin(), "simulate");
    args.insert(args.end(), {"--seed", "9", "--threads", threads, "--out", D(std::string("r") + threads + ".json")});
    ASSERT_EQ(Cli(args), kExitOk);
  }
  EXPECT_EQ(Slurp(dir_ / "r1.json"), Slurp(dir_ / "r3.json"));
}

TEST_F(CliTest, SeedPrecedence) {
  std::ofstream(D("cfg.json")) << R"({"seed": 21, "simulation": {"horizon_days": 200}})";
  auto base = kSmallSim;
  base.erase(base.begin() + 6, base.begin() + 8);  // horizon from the config
  base.insert(base.begin(), "simulate");
  const auto seed_of = [&](std::vector<std::string> extra, const std::string& name) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    args.push_back("--out");
    args.push_back(D(name));
    EXPECT_EQ(Cli(args), kExitOk);
    return json::parse(Slurp(dir_ / name)).at("seed").get<uint64_t>();
  };
  EXPECT_EQ(seed_of({"--config", D("cfg.json"), "--seed", "5"}, "a.json"), 5u);
  setenv("LETHE_SEED", "33", 1);
  EXPECT_EQ(seed_of({"--config", D("cfg.json")}, "b.json"), 21u);
  base.insert(base.end(), {"--horizon-days", "200"});
  EXPECT_EQ(seed_of({}, "c.json"), 33u);
  unsetenv("LETHE_SEED");
  EXPECT_EQ(seed_of({}, "d.json"), 1u);
}

TEST_F(CliTest, ConfigErrorsExitOne) {
  std::ofstream(D("bad.json")) << R"({"simulation": {"horizon": 10}})";
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(Cli({"simulate", "--config", D("bad.json")}), kExitValidation);
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("simulation.horizon"), std::string::npos) << err;
}

TEST_F(CliTest, CurveFiles) {
  ASSERT_EQ(Cli({"hazard-curve", "--out-dir", D("h")}), kExitOk);
  for (const char* f : {"inverse_hazard_geometric.csv", "inverse_hazard_negative_binomial_n0.15.csv",
                        "inverse_hazard_zeta.csv", "inverse_hazard_poisson.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "h" / f)) << f;
  }
  const std::string geo = Slurp(dir_ / "h" / "inverse_hazard_geometric.csv");
  EXPECT_EQ(geo.substr(0, 31), "t_seconds,value\n60,32399\n120,32");
  ASSERT_EQ(Cli({"ccdf-curve", "--out-dir", D("c"), "--kind", "zeta", "--t-max", "2h", "--step", "1h"}), kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "c" / "inverse_ccdf_zeta.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "c" / "inverse_ccdf_geometric.csv"));
  ASSERT_EQ(Cli({"lr-curve", "--out-dir", D("l"), "--shape", "6e-4", "--shape", "1e-4"}), kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "l" / "lr_negative_binomial_n0.0006.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "l" / "lr_negative_binomial_n0.0001.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "l" / "lr_zeta.csv"));
}

TEST_F(CliTest, FftTableCsv) {
  ASSERT_EQ(Cli({"fft-table", "--initial-posts", "20000", "--creations-per-day", "7", "--deletions-per-day", "2",
                 "--horizon-days", "400", "--scale-factor", "2e-8", "--availability", "0.9", "--theta-days", "30",
                 "--theta-days", "60", "--out", D("fft.csv")}),
            kExitOk);
  std::ifstream in(dir_ / "fft.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "scenario,availability,theta_days,shape_n,fp,fp_scaled,precision,recall");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST_F(CliTest, UtilityOutputs) {
  ASSERT_EQ(Cli({"utility", "--synthetic", "--synthetic-posts", "200", "--availability", "0.85",
                 "--availability", "0.95", "--theta-days", "30", "--out", D("u.json")}),
            kExitOk);
  const auto doc = json::parse(Slurp(dir_ / "u.json"));
  ASSERT_EQ(doc.at("cells").size(), 2u);
  EXPECT_GE(doc.at("cells")[0].at("utility").get<double>(), 0.95);

  std::ofstream(D("t.csv")) << "post_key,creation_epoch_seconds,offset_seconds\na,0,0\na,0,5\n";
  ASSERT_EQ(Cli({"utility", "--trace", D("t.csv"), "--theta-days", "30", "--availability", "0.9", "--out", D("t.json")}),
            kExitOk);
  const auto t = json::parse(Slurp(dir_ / "t.json"));
  EXPECT_EQ(t.at("interactions"), 2);

  std::ofstream(D("empty.csv")) << "";
  ASSERT_EQ(Cli({"utility", "--trace", D("empty.csv"), "--theta-days", "30", "--availability", "0.9", "--out", D("e.json")}),
            kExitOk);
  EXPECT_EQ(json::parse(Slurp(dir_ / "e.json")).at("cells")[0].at("utility"), "no interactions");
}

TEST_F(CliTest, StoreServeAnswersAndStopsOnSigterm) {
  int err_pipe[2];
  ASSERT_EQ(pipe(err_pipe), 0);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, err_pipe[1], 2);
  posix_spawn_file_actions_addclose(&actions, err_pipe[0]);
  const std::string data = D("store");
  std::vector<const char*> argv = {LETHE_CLI_PATH, "store", "serve", "--port", "0", "--seed", "3",
                                   "--data-dir", data.c_str(), nullptr};
  pid_t pid = 0;
  ASSERT_EQ(posix_spawn(&pid, LETHE_CLI_PATH, &actions, nullptr, const_cast<char**>(argv.data()), environ), 0);
  posix_spawn_file_actions_destroy(&actions);
  close(err_pipe[1]);

  std::string banner;
  char c;
  while (read(err_pipe[0], &c, 1) == 1 && c != '\n') banner += c;
  const auto pos = banner.rfind(' ');
  ASSERT_NE(pos, std::string::npos) << banner;
  const int port = std::stoi(banner.substr(pos + 1));
  {
    StoreClient client("127.0.0.1", static_cast<uint16_t>(port));
    const auto id = json::parse(client.Call(R"({"op":"put","content":"x","token":"t"})")).at("post_id");
    EXPECT_EQ(client.Call(json{{"op", "get"}, {"post_id", id}, {"token", "t"}}.dump()),
              R"({"status":"ok","content":"x"})");
  }
  kill(pid, SIGTERM);
  int status = 0;
  ASSERT_EQ(waitpid(pid, &status, 0), pid);
  close(err_pipe[0]);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_TRUE(fs::exists(dir_ / "store" / "snapshot.json"));
}

}  // namespace
}  // namespace lethe
