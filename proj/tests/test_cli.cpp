#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(CLASSCOUNT_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const char* name) { return std::string(CLASSCOUNT_DATA_DIR) + "/" + name; }

fs::path scratch(const std::string& name, const std::string& content) {
  const auto p = fs::temp_directory_path() / ("classcount_cli_" + std::to_string(::getpid()) + "_" + name);
  std::ofstream(p) << content;
  return p;
}

}  // namespace

TEST(Cli, AnalyzeCholera) {
  const auto r = run("analyze " + data("cholera.freq") + " --reps 20000");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.rfind("config: {", 0), 0u);
  for (const char* cell : {"0.593", "0.544", "0.484", "0.582", "= 88"}) EXPECT_NE(r.out.find(cell), std::string::npos);
}

TEST(Cli, AnalyzeJson) {
  const auto r = run("analyze " + data("cholera.freq") + " --no-envelope --format json");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["pseudo_mle"]["npmle_theta_1"], 88);
  EXPECT_TRUE(j["envelope"].is_null());
  EXPECT_FALSE(j["config"]["envelope"]["enabled"].get<bool>());
}

TEST(Cli, EmptyFileIsAUsageError) {
  const auto p = scratch("empty.freq", "");
  EXPECT_EQ(run("analyze " + p.string()).code, 2);
  fs::remove(p);
}

TEST(Cli, BadInputs) {
  EXPECT_EQ(run("analyze /nonexistent/file.freq").code, 2);
  EXPECT_EQ(run("analyze " + data("cholera.freq") + " --kmax 9").code, 2);
  EXPECT_EQ(run("analyze " + data("cholera.freq") + " --bogus").code, 2);
  EXPECT_EQ(run("affinity --c 10 --rho 1.5").code, 2);
  EXPECT_EQ(run("").code, 2);
  const auto p = scratch("bad.freq", "1 2\nfoo\n");
  const auto r = run("analyze " + p.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("line 2"), std::string::npos) << r.out;
  fs::remove(p);
}

TEST(Cli, DegradedRunExitsOne) {
  const auto p = scratch("ones.freq", "1 5\n");
  EXPECT_EQ(run("analyze " + p.string() + " --no-envelope").code, 1);
  fs::remove(p);
}

TEST(Cli, RawInput) {
  const auto p = scratch("raw.txt", "1\n1\n2\n3\n1\n");
  const auto r = run("analyze --raw " + p.string() + " --no-envelope --format json");
  ASSERT_NE(r.code, 2) << r.out;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["dataset"]["n"], 5);
  EXPECT_EQ(j["dataset"]["counts"]["1"], 3);
  fs::remove(p);
}

TEST(Cli, Affinity) {
  const auto r = run("affinity --c 64 --rho 1");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("# config: "), std::string::npos);
  EXPECT_NE(r.out.find("64,1,0.0498"), std::string::npos) << r.out;
}

TEST(Cli, SimulateIsDeterministic) {
  const std::string args = "simulate --c 1000 --atoms 1,3 --weights .5,.5 --seed 7";
  const auto a = run(args);
  const auto b = run(args);
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, run("simulate --c 1000 --atoms 1,3 --weights .5,.5 --seed 8").out);

  const auto file = fs::temp_directory_path() / ("classcount_cli_" + std::to_string(::getpid()) + "_sim.freq");
  ASSERT_EQ(run(args + " -o " + file.string()).code, 0);
  const auto again = run("analyze " + file.string() + " --no-envelope --format json");
  EXPECT_NE(again.code, 2) << again.out;
  fs::remove(file);
}

TEST(Cli, DemoDiscontinuity) {
  const auto r = run("demo-discontinuity --s 0.1,0.01,0.001");
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream in(r.out);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 's') continue;
    std::vector<double> f;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) f.push_back(std::stod(cell));
    ASSERT_GE(f.size(), 8u);
    EXPECT_LE(f[5], 2.0 * f[0] + 1e-12);  // tv_lower <= 2 s
    ++rows;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(run("demo-discontinuity --s 0.01,0.1").code, 2);
}

TEST(Cli, BootstrapAndEnvelopeSubcommands) {
  const auto b = run("bootstrap " + data("cholera.freq") + " -B 20 --kmax 2 --threads 2");
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_NE(b.out.find("config: "), std::string::npos);
  const auto e = run("envelope " + data("cholera.freq") + " --epsilon 0.18 --format json");
  ASSERT_EQ(e.code, 0) << e.out;
  const auto j = nlohmann::json::parse(e.out);
  EXPECT_NEAR(j["theta_lower"].get<double>(), 0.25, 0.01);
  EXPECT_EQ(j["epsilon_source"], "fixed");
}
