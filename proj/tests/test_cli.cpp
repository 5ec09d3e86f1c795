#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("pwprox_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = pwprox::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::set<std::string> tree(const fs::path& root) {
  std::set<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(root)) names.insert(fs::relative(e.path(), root).string());
  return names;
}

TEST(CliHelp, MatchesGoldenFiles) {
  const fs::path golden(PWPROX_GOLDEN_DIR);
  EXPECT_EQ(pwprox::cli::help_text(""), slurp(golden / "help_main.txt"));
  for (const char* sub : {"solve", "benchmark", "prox-check", "certify"}) {
    EXPECT_EQ(pwprox::cli::help_text(sub), slurp(golden / ("help_" + std::string(sub) + ".txt"))) << sub;
    const Result r = run({sub, "--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, pwprox::cli::help_text(sub));
  }
}

TEST(CliHelp, ListsEveryConfigFlag) {
  const std::string help = pwprox::cli::help_text("benchmark");
  for (const char* flag :
       {"--loss", "--penalty", "--lambda", "--b", "--tau", "--beta", "--data-kind", "--data-path", "--header", "--images",
        "--labels", "--class-a", "--class-b", "--per-class", "--n", "--d", "--sparsity", "--noise", "--feature-scale",
        "--seed", "--solver", "--s", "--w0", "--K", "--output-dir", "--timing", "--no-fit-rates",
        "--rate-tail-fraction", "--config"}) {
    EXPECT_NE(help.find(std::string(flag) + " "), std::string::npos) << flag;
  }
}

TEST(CliExit, UsageErrors) {
  Result r = run({"frob"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("unknown subcommand 'frob'"), std::string::npos);
  EXPECT_NE(r.err.find("Usage:"), std::string::npos);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"solve", "--unknown-flag", "1"}).code, 1);
  EXPECT_EQ(run({"solve", "--K", "abc"}).code, 1);
  EXPECT_EQ(run({"certify", "--G", "1"}).code, 1);
  EXPECT_EQ(run({"prox-check", "--s", "-1"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(CliExit, RuntimeErrors) {
  Result r = run({"solve", "--data-kind", "csv", "--data-path", "/nonexistent/data.csv"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err, "error: data file '/nonexistent/data.csv' does not exist\n");
  EXPECT_EQ(run({"certify", "--L-g", "-1"}).code, 2);
  EXPECT_EQ(run({"solve", "--penalty", "capped_l1", "--lambda", "-1"}).code, 2);
}

TEST(CliCertify, SinglePieceBindsOnInverseLipschitz) {
  const Result r = run({"certify", "--L-g", "2", "--G", "1", "--F0", "0.5"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("binding term: 1/L_g\n"), std::string::npos);
  EXPECT_NE(r.out.find("s_max = 0.5\n"), std::string::npos);

  const Result j = run({"certify", "--L-g", "2", "--G", "1", "--json"});
  EXPECT_EQ(json::parse(j.out).at("binding_term"), "1/L_g");
}

TEST(CliCertify, ConstantsFromPenalty) {
  const Result r = run({"certify", "--L-g", "1", "--G", "0.5", "--eps0", "0.4", "--penalty", "indicator", "--lambda",
                        "0.5", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json c = json::parse(r.out);
  EXPECT_EQ(c.at("inputs").at("J"), 0.5);
  EXPECT_EQ(c.at("inputs").at("C"), "inf");
}

TEST(CliProxCheck, GapsAreNonPositive) {
  const Result r = run({"prox-check", "--penalty", "capped_l1", "--lambda", "0.2", "--b", "1", "--points", "21",
                        "--resolution", "1e-5"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "piece,kernel,x,closed_form,oracle,gap");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    const double gap = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_LE(gap, 1e-8) << line;
  }
  EXPECT_EQ(rows, 3 * 21);
  EXPECT_EQ(run({"prox-check", "--piece", "3"}).code, 1);
}

TEST(CliSolve, PrintsObjectiveAndResidual) {
  TempDir dir;
  const Result r = run({"solve", "--n", "40", "--d", "5", "--K", "15", "--solver", "apg", "--output-dir",
                        dir.file("out")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("solver: apg\n"), std::string::npos);
  EXPECT_NE(r.out.find("iterations: 15\n"), std::string::npos);
  EXPECT_NE(r.out.find("final objective: "), std::string::npos);
  EXPECT_NE(r.out.find("stationarity residual: "), std::string::npos);
  EXPECT_EQ(tree(dir.path()), (std::set<std::string>{"out", "out/apg.csv", "out/apg.json"}));
  EXPECT_EQ(run({"solve", "--solver", "apg", "--solver", "pgd", "--n", "10", "--d", "2"}).code, 1);
}

TEST(CliBenchmark, ConfigRunWritesThreeTraces) {
  TempDir dir;
  const std::string out = dir.file("results");
  std::ofstream(dir.file("cfg.json")) << json{{"penalty", {{"kind", "capped_l1"}, {"params", {{"lambda", 0.2}, {"b", 1}}}}},
                                              {"data", {{"kind", "synth"}, {"n", 200}, {"d", 20}, {"seed", 4}}},
                                              {"solvers", {{{"name", "pgd"}, {"K", 40}},
                                                           {{"name", "apg"}, {"K", 40}},
                                                           {{"name", "ppgd"}, {"K", 40}}}},
                                              {"output_dir", out}}
                                                 .dump();
  const Result r = run({"benchmark", "--config", dir.file("cfg.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(tree(dir.path()), (std::set<std::string>{"cfg.json", "results", "results/pgd.csv", "results/apg.csv",
                                                     "results/ppgd.csv", "results/report.json"}));
  EXPECT_NE(r.out.find("wrote 3 traces"), std::string::npos);
  std::ifstream csv(out + "/ppgd.csv");
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 42);
}

TEST(CliBenchmark, ConfigWinsOverInlineFlagsWithWarning) {
  TempDir dir;
  std::ofstream(dir.file("cfg.json")) << json{{"data", {{"n", 60}, {"d", 4}}},
                                              {"solvers", {{{"name", "pgd"}, {"K", 7}}}},
                                              {"fit_rates", false},
                                              {"output_dir", dir.file("o")}}
                                                 .dump();
  const Result r = run({"benchmark", "--config", dir.file("cfg.json"), "--K", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning:"), std::string::npos);
  const json report = json::parse(slurp(dir.file("o") + "/report.json"));
  EXPECT_EQ(report.at("solvers")[0].at("K"), 7);
}

TEST(CliBenchmark, InlineFlagsOnly) {
  TempDir dir;
  const Result r = run({"benchmark", "--n", "50", "--d", "6", "--K", "10", "--solver", "ppgd", "--solver", "pgd",
                        "--no-fit-rates", "--output-dir", dir.file("x")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(tree(dir.path()), (std::set<std::string>{"x", "x/ppgd.csv", "x/pgd.csv", "x/report.json"}));
}

}  // namespace
