#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../tools/cli.hpp"
#include "sparse_consist/operators.hpp"

namespace fs = std::filesystem;

namespace sparse_consist {
namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sparse-consist");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("SPARSE_CONSIST_SEED");
  }
  void TearDown() override {
    fs::remove_all(dir_);
    unsetenv("SPARSE_CONSIST_SEED");
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void generate(const std::string& distortion) {
    const auto r = run_cli({"gen", "--n", "16", "--m", "32", "--k", "3", "--seed", "4",
                            "--distortion", distortion, "--out", dir_.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  bool has_temp_files() const {
    for (const auto& e : fs::directory_iterator(dir_)) {
      if (e.path().extension() == ".tmp") return true;
    }
    return false;
  }

  fs::path dir_;
};

const std::vector<std::string> kSmall = {"--n", "16", "--m", "32", "--k", "3", "--trials", "2"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

TEST_F(CliTest, GenWritesInstance) {
  generate("clip:0.5");
  const Dictionary d = read_dictionary(path("dictionary.spcd"));
  EXPECT_EQ(d.rows(), 16);
  EXPECT_EQ(d.cols(), 32);
  const auto x = read_vector(path("x.txt"));
  const auto y = read_vector(path("y.txt"));
  const auto alpha = read_vector(path("alpha.txt"));
  EXPECT_LT((d.synthesize(alpha) - x).norm(), 1e-12);
  EXPECT_EQ(y, clip(x, 0.5, -0.5));
  EXPECT_FALSE(has_temp_files());
}

TEST_F(CliTest, SolveHappyPath) {
  generate("clip:0.5");
  const auto r = run_cli({"solve", "--dict", path("dictionary.spcd"), "--signal", path("y.txt"),
                          "--distortion", "clip:0.5", "--solver", "fista", "--lambda", "1e-2",
                          "--out", path("result.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(slurp(path("result.json")));
  for (const char* key : {"alpha", "x_hat", "objective", "iterations", "converged", "wall_time_s",
                          "kkt_residual", "solver", "distortion"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
  EXPECT_EQ(doc["alpha"].size(), 32u);
  EXPECT_EQ(doc["x_hat"].size(), 16u);
  EXPECT_EQ(doc["solver"], "FISTA");
  EXPECT_EQ(doc["distortion"], "clip:0.5");
  EXPECT_FALSE(has_temp_files());
}

TEST_F(CliTest, SolveWithEverySolverAndCsvDictionary) {
  generate("quant:3");
  write_dictionary_csv(path("dict.csv"), read_dictionary(path("dictionary.spcd")));
  for (const char* solver : {"ista", "fista", "admm"}) {
    const auto r = run_cli({"solve", "--dict", path("dict.csv"), "--signal", path("y.txt"),
                            "--distortion", "quant:3", "--solver", solver, "--out",
                            path(std::string(solver) + ".json")});
    EXPECT_EQ(r.code, 0) << solver << ": " << r.err;
  }
}

TEST_F(CliTest, SolveDimensionMismatchExitsThree) {
  generate("clip:0.5");
  write_vector(path("short.txt"), Eigen::VectorXd::Zero(15));
  const auto r = run_cli({"solve", "--dict", path("dictionary.spcd"), "--signal", path("short.txt"),
                          "--out", path("result.json")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("dimension"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("result.json")));
}

TEST_F(CliTest, SolveInconsistentObservationExitsTwo) {
  generate("none");
  Eigen::VectorXd y = read_vector(path("y.txt"));
  y[0] = 2.0;
  write_vector(path("loud.txt"), y);
  const auto r = run_cli({"solve", "--dict", path("dictionary.spcd"), "--signal", path("loud.txt"),
                          "--distortion", "clip:1.5", "--out", path("result.json")});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, SolveMalformedFilesExitTwo) {
  generate("clip:0.5");
  std::ofstream(path("garbage.spcd")) << "SPCD\x01";
  std::ofstream(path("bad.txt")) << "0.1 zero 0.3\n";
  EXPECT_EQ(run_cli({"solve", "--dict", path("garbage.spcd"), "--signal", path("y.txt"), "--out",
                     path("r.json")})
                .code,
            2);
  EXPECT_EQ(run_cli({"solve", "--dict", path("dictionary.spcd"), "--signal", path("bad.txt"),
                     "--out", path("r.json")})
                .code,
            2);
  EXPECT_EQ(run_cli({"solve", "--dict", path("missing.spcd"), "--signal", path("y.txt"), "--out",
                     path("r.json")})
                .code,
            2);
  EXPECT_EQ(run_cli({"solve", "--dict", path("dictionary.spcd"), "--signal", path("y.txt"),
                     "--distortion", "clip:abc", "--out", path("r.json")})
                .code,
            2);
}

TEST_F(CliTest, StrictNonConvergenceExitsOne) {
  generate("clip:0.5");
  const std::vector<std::string> base = {"solve", "--dict", path("dictionary.spcd"), "--signal",
                                         path("y.txt"), "--distortion", "clip:0.5", "--max-iter",
                                         "2", "--out", path("r.json")};
  EXPECT_EQ(run_cli(base).code, 0);
  auto strict = base;
  strict.push_back("--strict");
  EXPECT_EQ(run_cli(strict).code, 1);
  EXPECT_TRUE(fs::exists(path("r.json")));
}

TEST_F(CliTest, DeclipBenchRowCount) {
  const auto r = run_cli(with_small({"declip-bench", "--seed", "0"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 1u + 4u * 3u);
  EXPECT_EQ(l[0], "task,solver,distortion_param,mean_snr_db,std_snr_db,mean_iters,mean_time_s");
  EXPECT_EQ(l[1].rfind("declipping,ISTA,0.2,", 0), 0u);

  const auto only = run_cli(with_small({"dequant-bench", "--solvers", "fista"}));
  ASSERT_EQ(only.code, 0) << only.err;
  EXPECT_EQ(lines(only.out).size(), 1u + 5u);
}

TEST_F(CliTest, BenchIsByteDeterministic) {
  auto args = with_small({"declip-bench", "--seed", "7", "--grid", "0.3,0.7"});
  auto a = args;
  a.insert(a.end(), {"--out", path("a.csv"), "--plot-data", path("a.dat")});
  auto b = args;
  b.insert(b.end(), {"--out", path("b.csv"), "--jobs", "2"});
  ASSERT_EQ(run_cli(a).code, 0);
  ASSERT_EQ(run_cli(b).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(lines(slurp(path("a.dat")))[0], "# input");
  EXPECT_FALSE(has_temp_files());
}

TEST_F(CliTest, RecordTimeFillsTimeColumn) {
  const auto r = run_cli(with_small({"declip-bench", "--grid", "0.5", "--solvers", "fista",
                                     "--record-time"}));
  ASSERT_EQ(r.code, 0);
  const auto row = lines(r.out)[1];
  EXPECT_EQ(row.find("NA"), std::string::npos);
  EXPECT_GT(std::stod(row.substr(row.rfind(',') + 1)), 0.0);
}

TEST_F(CliTest, InvalidGridExitsTwo) {
  EXPECT_EQ(run_cli(with_small({"declip-bench", "--grid", "0.2,abc"})).code, 2);
  EXPECT_EQ(run_cli(with_small({"declip-bench", "--grid", "-0.4"})).code, 2);
  EXPECT_EQ(run_cli(with_small({"dequant-bench", "--grid", "0"})).code, 2);
  EXPECT_EQ(run_cli(with_small({"dequant-bench", "--grid", "2.5"})).code, 2);
  EXPECT_EQ(run_cli(with_small({"dequant-bench", "--grid", ","})).code, 2);
  EXPECT_EQ(run_cli(with_small({"declip-bench", "--solvers", "newton"})).code, 2);
}

TEST_F(CliTest, BadFlagsExitTwo) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"declip-bench", "--trials", "0"}).code, 2);
  EXPECT_EQ(run_cli({"declip-bench", "--lambda", "-1"}).code, 2);
  EXPECT_EQ(run_cli({"declip-bench", "--unknown"}).code, 2);
  EXPECT_EQ(run_cli({"solve", "--dict", "x"}).code, 2);
}

TEST_F(CliTest, HelpDocumentsDefaults) {
  const auto r = run_cli({"declip-bench", "--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* text : {"[256]", "[512]", "[16]", "[100]", "[0.01]", "[400]", "--jobs",
                           "--plot-data", "--shared-dictionary", "SPARSE_CONSIST_SEED"}) {
    EXPECT_NE(r.out.find(text), std::string::npos) << text;
  }
  const auto solve = run_cli({"solve", "--help"});
  for (const char* text : {"--strict", "--distortion", "[fista]", "[0.01]", "[400]"}) {
    EXPECT_NE(solve.out.find(text), std::string::npos) << text;
  }
}

TEST_F(CliTest, EnvironmentSeedOverridesFlag) {
  const auto base = with_small({"declip-bench", "--grid", "0.5", "--solvers", "fista"});
  auto seeded = base;
  seeded.insert(seeded.end(), {"--seed", "11"});
  const auto expected = run_cli(seeded).out;
  auto other = base;
  other.insert(other.end(), {"--seed", "3"});
  EXPECT_NE(run_cli(other).out, expected);
  setenv("SPARSE_CONSIST_SEED", "11", 1);
  EXPECT_EQ(run_cli(other).out, expected);
  setenv("SPARSE_CONSIST_SEED", "eleven", 1);
  EXPECT_EQ(run_cli(other).code, 2);
}

TEST_F(CliTest, TimingTableShape) {
  const auto r = run_cli(with_small({"timing", "--declip-grid", "0.5", "--dequant-grid", "3",
                                     "--out", path("t.csv")}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(slurp(path("t.csv")));
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], "task,ADMM,ISTA,FISTA");
  EXPECT_EQ(l[1].rfind("declipping,", 0), 0u);
  EXPECT_EQ(l[2].rfind("dequantization,", 0), 0u);
}

}  // namespace
}  // namespace sparse_consist
