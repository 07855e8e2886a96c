#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "chernoff_heat/cli.hpp"

using namespace chernoff_heat;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("chernoff_heat_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    ::unsetenv(kConfigEnvVar);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static std::size_t line_count(const std::string& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
  }

  int run_quiet(const std::string& sub, const RunConfig& c) {
    std::ostringstream log, err;
    const int code = run(sub, c, log, err);
    last_log_ = log.str();
    last_err_ = err.str();
    return code;
  }

  int run_binary(const std::string& args) {
    const std::string cmd = std::string(CHERNOFF_HEAT_CLI_PATH) + " " + args + " > " + path("stdout.txt") + " 2> " +
                            path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
  std::string last_log_;
  std::string last_err_;
};

RunConfig small_study() {
  RunConfig c;
  c.level = {7};
  c.n = {2, 4, 8};
  return c;
}

}  // namespace

TEST_F(CliTest, DefaultsReproduceHeadlineStudy) {
  const RunConfig c;
  EXPECT_EQ(c.manifold, "circle");
  EXPECT_EQ(c.t, 0.5);
  EXPECT_EQ(c.partition, "uniform");
  EXPECT_EQ(c.n, (std::vector<int>{2, 4, 8, 16, 32, 64}));
  EXPECT_EQ(c.level, (std::vector<int>{9}));
  EXPECT_EQ(c.alpha, 0.45);
  EXPECT_NO_THROW(validate(c));
}

TEST_F(CliTest, UnknownAndMistypedKeysRejected) {
  RunConfig c;
  EXPECT_THROW(apply_json(c, Json::parse(R"({"manifold": "sphere", "levle": 5})")), ConfigError);
  EXPECT_THROW(apply_json(c, Json::parse(R"({"t": "half"})")), ConfigError);
  EXPECT_THROW(apply_json(c, Json::parse(R"([1, 2])")), ConfigError);
  apply_json(c, Json::parse(R"({"manifold": "torus", "radii": [1.0, 2.0], "n": [3]})"));
  EXPECT_EQ(c.manifold, "torus");
  EXPECT_EQ(c.n, (std::vector<int>{3}));
}

TEST_F(CliTest, RangeValidation) {
  auto bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.alpha = 0.5; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.t = -1; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.n = {}; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.manifold = "klein"; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.radii = {1, 2}; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.suite = "lemma9"; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.delta = {2.0}; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.max_terms = 0; })), ConfigError);
  EXPECT_EQ(run_quiet("study", bad([](RunConfig& c) { c.level = {0}; })), exit_config);
  EXPECT_EQ(run_quiet("nonsense", RunConfig{}), exit_config);
}

TEST_F(CliTest, LayeringFileThenFlags) {
  {
    std::ofstream f(path("env.json"));
    f << R"({"manifold": "sphere", "t": 0.3, "level": [4]})";
  }
  {
    std::ofstream f(path("file.json"));
    f << R"({"t": 0.2})";
  }
  ::setenv(kConfigEnvVar, path("env.json").c_str(), 1);
  const auto c = resolve_config(path("file.json"), Json{{"level", {5}}});
  EXPECT_EQ(c.manifold, "sphere");
  EXPECT_EQ(c.t, 0.2);
  EXPECT_EQ(c.level, (std::vector<int>{5}));
  EXPECT_THROW(resolve_config(path("missing.json"), Json::object()), ConfigError);
  ::unsetenv(kConfigEnvVar);
}

TEST_F(CliTest, StudyWritesOneRowPerPartition) {
  auto c = small_study();
  c.out = path("study");
  ASSERT_EQ(run_quiet("study", c), exit_ok) << last_err_;
  EXPECT_EQ(line_count(path("study.csv")), 1 + c.n.size());
  const auto j = Json::parse(slurp(path("study.json")));
  EXPECT_EQ(j["config"], to_json(c));
  EXPECT_EQ(j["reports"][0]["rows"].size(), c.n.size());
  EXPECT_TRUE(j.contains("sidecar"));
  EXPECT_NE(last_log_.find("n=8"), std::string::npos);
}

TEST_F(CliTest, StudyJsonIsReproducible) {
  auto c = small_study();
  c.out = path("a");
  ASSERT_EQ(run_quiet("study", c), exit_ok);
  c.out = path("b");
  ASSERT_EQ(run_quiet("study", c), exit_ok);
  auto a = Json::parse(slurp(path("a.json")));
  auto b = Json::parse(slurp(path("b.json")));
  a["config"].erase("out");
  b["config"].erase("out");
  EXPECT_EQ(strip_sidecar(a).dump(), strip_sidecar(b).dump());
}

TEST_F(CliTest, ChecksExitCodes) {
  RunConfig c;
  c.out = path("checks");
  c.suite = "lemma4";
  EXPECT_EQ(run_quiet("checks", c), exit_ok) << last_err_;
  const auto j = Json::parse(slurp(path("checks.json")));
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["checks"][0]["check"], "lemma4");

  // no partition fits: tau >= t for the default deltas
  c.suite = "lemma3";
  EXPECT_EQ(run_quiet("checks", c), exit_computation);

  // circle residual is O(t^2), outside the t^{3/2} band
  c.suite = "expansion";
  EXPECT_EQ(run_quiet("checks", c), exit_check_failed);
}

TEST_F(CliTest, KernelChainAndGrid) {
  RunConfig c;
  c.level = {6};
  c.t = 0.3;
  c.slice = 3;
  c.out = path("kernel");
  ASSERT_EQ(run_quiet("kernel", c), exit_ok) << last_err_;
  EXPECT_EQ(line_count(path("kernel.csv")), 1u + 64u);
  EXPECT_EQ(slurp(path("kernel.csv")).substr(0, 22), "x_index,y_index,value\n");

  c.slice = 99;
  EXPECT_EQ(run_quiet("kernel", c), exit_computation);

  c = RunConfig{};
  c.level = {7};
  c.n = {4};
  c.out = path("chain");
  ASSERT_EQ(run_quiet("chain", c), exit_ok) << last_err_;
  EXPECT_EQ(line_count(path("chain.csv")), 2u);
  const auto j = Json::parse(slurp(path("chain.json")));
  EXPECT_LT(j["max_row_sum_defect"].get<double>(), 1e-10);

  c.manifold = "sphere";
  c.level = {2};
  c.out = path("grid");
  ASSERT_EQ(run_quiet("dump-grid", c), exit_ok);
  EXPECT_EQ(line_count(path("grid.csv")), 1u + 32u);
  EXPECT_EQ(slurp(path("grid.csv")).substr(0, 48), "index,param0,param1,ambient0,ambient1,ambient2,w");
}

TEST_F(CliTest, BinaryContract) {
  EXPECT_EQ(run_binary("checks --suite lemma4 --out " + path("l4")), 0);
  EXPECT_TRUE(fs::exists(path("l4.csv")));
  {
    std::ofstream f(path("bad.json"));
    f << R"({"manifold": "circle", "nodes": 3})";
  }
  EXPECT_EQ(run_binary("study --config " + path("bad.json")), 2);
  EXPECT_EQ(run_binary("study --no-such-flag 1"), 2);
  EXPECT_EQ(run_binary("study --alpha 0.7"), 2);
  EXPECT_EQ(run_binary("study --level 7 --n 2,4,8 --out " + path("s")), 0);
  EXPECT_EQ(line_count(path("s.csv")), 4u);
  EXPECT_EQ(run_binary("study --level 8 --n 2 --n 4 --n 8 --n 16 --out " + path("s2")), 0);
  EXPECT_EQ(line_count(path("s2.csv")), 5u);
}
