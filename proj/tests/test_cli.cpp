#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "support.hpp"

namespace fs = std::filesystem;
using namespace equiflow;

namespace {

struct Exec {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into the captured output.
Exec run(const std::string& args) {
  const std::string cmd = std::string(EQUIFLOW_CLI) + " " + args + " 2>&1";
  Exec r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.out += buf;
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(EQUIFLOW_DATA_DIR) + "/" + name; }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("equiflow_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& body = "") const {
    const fs::path f = path / name;
    if (!body.empty()) std::ofstream(f) << body;
    return f.string();
  }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, SolveStableBraess) {
  TempDir tmp;
  const std::string json = tmp.file("out.json"), trace = tmp.file("trace.csv");
  Exec r = run("solve --net " + data("braess_net.tntp") + " --trips " + data("braess_trips.tntp") +
              " --regime sd --eps-rel 0.01 --out " + json + " --trace " + trace);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("relative_gap="), std::string::npos);
  auto j = nlohmann::json::parse(slurp(json));
  EXPECT_EQ(j["regime"], "sd");
  EXPECT_EQ(j["links"].size(), 3u);
  double f13 = 0.0;
  for (const auto& l : j["links"])
    if (l["from"] == 1 && l["to"] == 3) f13 = l["flow"].get<double>();
  EXPECT_NEAR(f13, 1000.0, 100.0);
  const std::string csv = slurp(trace);
  EXPECT_GT(std::count(csv.begin(), csv.end(), '\n'), 1);
}

TEST(Cli, SolveBeckmannDefaultsToFrankWolfe) {
  TempDir tmp;
  const std::string json = tmp.file("out.json");
  Exec r = run("solve --net " + data("braess_net.tntp") + " --trips " + data("braess_trips.tntp") +
              " --regime beckmann --eps-rel 1e-4 --out " + json);
  ASSERT_EQ(r.code, 0) << r.out;
  auto j = nlohmann::json::parse(slurp(json));
  EXPECT_EQ(j["method"], "fw");
  EXPECT_TRUE(j["converged"].get<bool>());
}

TEST(Cli, Validate) {
  Exec r = run("validate --net " + data("SiouxFalls_net.tntp") + " --trips " + data("SiouxFalls_trips.tntp"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("24"), std::string::npos);
  EXPECT_NE(r.out.find("76"), std::string::npos);
}

TEST(Cli, ModalSplit) {
  Exec r = run("modal-split --x0 0.5");
  EXPECT_EQ(r.code, 0) << r.out;
  const auto pos = r.out.find("x*=");
  ASSERT_NE(pos, std::string::npos) << r.out;
  EXPECT_NEAR(std::stod(r.out.substr(pos + 3)), 0.4886, 1e-3);
  Exec bad = run("modal-split --gamma 6");
  EXPECT_EQ(bad.code, 1);
}

TEST(Cli, InfeasibleExitsWithTwo) {
  TempDir tmp;
  const std::string trips = tmp.file("trips.tntp",
                                     "<NUMBER OF ZONES> 3\n<TOTAL OD FLOW> 4500\n<END OF METADATA>\n"
                                     "Origin 1\n 3 : 1500;\nOrigin 2\n 3 : 3000;\n");
  Exec r = run("solve --net " + data("braess_net.tntp") + " --trips " + trips + " --regime sd --eps-rel 1e-3");
  EXPECT_EQ(r.code, 2) << r.out;
}

TEST(Cli, BadInputExitsWithOne) {
  TempDir tmp;
  const std::string net = tmp.file("net.tntp", "<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n<END OF METADATA>\n~\n1 2 x\n");
  EXPECT_EQ(run("validate --net " + net + " --trips " + data("braess_trips.tntp")).code, 1);
  EXPECT_EQ(run("validate --net /nonexistent/file --trips " + data("braess_trips.tntp")).code, 1);
  EXPECT_EQ(run("solve --trips " + data("braess_trips.tntp")).code, 1);
  EXPECT_EQ(run("no-such-command").code, 1);
}

TEST(Cli, TripMatrixAndCalibration) {
  TempDir tmp;
  const std::string C = tmp.file("c.csv", "0,1\n1,0\n");
  const std::string L = tmp.file("l.csv", "0.5\n0.5\n");
  const std::string W = tmp.file("w.csv", "0.5,0.5\n");
  const std::string out = tmp.file("d.csv");
  Exec r = run("trip-matrix --costs " + C + " --origins " + L + " --dests " + W + " --beta 1 --out " + out);
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(out);
  Matrix D = read_matrix_csv(in);
  const double e = std::exp(1.0);
  EXPECT_NEAR(D(0, 0), 0.5 * e / (1 + e), 1e-8);
  EXPECT_NEAR(D(0, 1), 0.5 / (1 + e), 1e-8);

  Exec c = run("calibrate-beta --costs " + C + " --origins " + L + " --dests " + W + " --target " +
              std::to_string(1.0 / (1 + e)));
  ASSERT_EQ(c.code, 0) << c.out;
  const auto pos = c.out.find("beta=");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_NEAR(std::stod(c.out.substr(pos + 5)), 1.0, 1e-3);

  EXPECT_NE(run("calibrate-beta --costs " + C + " --origins " + L + " --dests " + W + " --target 0.5").code, 0);
}
