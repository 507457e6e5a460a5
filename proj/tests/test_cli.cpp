#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "unrollrisk/cli/app.hpp"
#include "unrollrisk/cli/sweep.hpp"
#include "unrollrisk/cli/verify.hpp"
#include "unrollrisk/numeric.hpp"
#include "unrollrisk/regularizer_io.hpp"

using namespace unrollrisk;
using namespace unrollrisk::cli;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "unrollrisk");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Invocation inv;
  inv.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  inv.out = out.str();
  inv.err = err.str();
  return inv;
}

fs::path temp_path(const std::string& name) {
  fs::path dir = UNROLLRISK_TEST_TMP;
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, CConstantReportsBounds) {
  const auto inv = invoke({"c-constant", "--n-steps", "3", "--omega", "1.8"});
  ASSERT_EQ(inv.code, kExitOk) << inv.err;
  const auto j = nlohmann::json::parse(inv.out);
  EXPECT_NEAR(j.at("lower").get<double>(), 1.35, 1e-12);
  EXPECT_NEAR(j.at("upper").get<double>(), 1.4690, 1e-4);
  EXPECT_EQ(j.at("branch"), "else");
  EXPECT_NEAR(j.at("value").get<double>(), 1.512, 1e-12);
}

TEST(Cli, MissingRequiredFlagIsUsageError) {
  EXPECT_EQ(invoke({"c-constant", "--n-steps", "3"}).code, kExitUsage);
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"sweep"}).code, kExitUsage);
  EXPECT_EQ(invoke({"bogus"}).code, kExitUsage);
}

TEST(Cli, InvalidValueIsUsageError) {
  const auto inv = invoke({"c-constant", "--n-steps", "4", "--omega", "0.5"});
  EXPECT_EQ(inv.code, kExitUsage);
  EXPECT_NE(inv.err.find("odd"), std::string::npos);
}

TEST(Cli, HelpExitsZero) {
  const auto inv = invoke({"--help"});
  EXPECT_EQ(inv.code, kExitOk);
  EXPECT_NE(inv.out.find("sweep"), std::string::npos);
}

TEST(Cli, LandscapeHasTwoMinimaForOddDepth) {
  const auto inv = invoke({"landscape", "--n-steps", "3", "--omega", "0.1", "--mu", "1", "--sigma", "0.1", "--theta",
                           "0.02", "--r-max", "8", "--points", "1000"});
  ASSERT_EQ(inv.code, kExitOk) << inv.err;
  const auto rows = parse_csv(inv.out);
  ASSERT_EQ(rows.size(), 1001u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"N", "r", "risk"}));
  std::vector<double> risk;
  for (std::size_t i = 1; i < rows.size(); ++i) risk.push_back(parse_double(rows[i][2]));
  int minima = 0;
  for (std::size_t i = 0; i < risk.size(); ++i)
    minima += (i == 0 || risk[i] < risk[i - 1]) && (i + 1 == risk.size() || risk[i] < risk[i + 1]);
  EXPECT_EQ(minima, 2);
}

TEST(Cli, CsvRoundTripsAtFullPrecision) {
  const auto inv = invoke({"sweep", "--quantity", "unrolling", "--model", "const", "iid", "--n", "3", "--mu", "0.7",
                           "--theta", "0.3", "--sigma", "0.45", "--k", "1:3", "--n-steps", "1:5", "--omega", "0.3",
                           "1.7"});
  ASSERT_EQ(inv.code, kExitOk) << inv.err;
  const auto rows = parse_csv(inv.out);
  ASSERT_EQ(rows.size(), 1u + 2 * 3 * 5 * 2);
  const auto& header = rows[0];
  const auto col = std::find(header.begin(), header.end(), "risk") - header.begin();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::string& cell = rows[i][static_cast<std::size_t>(col)];
    EXPECT_EQ(format_double(parse_double(cell)), cell);
  }
}

TEST(Cli, SweepSingleCellAndSkips) {
  const auto one = invoke({"sweep", "--quantity", "best-linear", "--n", "4"});
  ASSERT_EQ(one.code, kExitOk) << one.err;
  EXPECT_EQ(parse_csv(one.out).size(), 2u);
  const auto skip = invoke({"sweep", "--quantity", "bilevel", "--n", "2", "--k", "1:4"});
  ASSERT_EQ(skip.code, kExitOk);
  EXPECT_EQ(parse_csv(skip.out).size(), 3u);
  EXPECT_NE(skip.err.find("skipped 2"), std::string::npos);
  EXPECT_NE(skip.err.find("4 grid cells"), std::string::npos);
}

TEST(Cli, SweepCapExceeded) {
  const auto inv = invoke({"sweep", "--quantity", "unrolling", "--n", "1:100", "--k", "1:100", "--n-steps", "1:200"});
  EXPECT_EQ(inv.code, kExitUsage);
  EXPECT_NE(inv.err.find("cap"), std::string::npos);
}

TEST(Cli, SweepDeterministicAcrossThreads) {
  const std::vector<std::string> base{"sweep", "--quantity", "mc-check", "--model", "iid", "--n", "3", "--k", "1:3",
                                      "--n-steps", "2", "3", "--omega", "0.8", "--mc-samples", "2000"};
  auto a = base, b = base;
  a.insert(a.begin(), {"--seed", "5", "--threads", "1"});
  b.insert(b.begin(), {"--seed", "5", "--threads", "3"});
  const auto ra = invoke(a), rb = invoke(b), rc = invoke(a);
  ASSERT_EQ(ra.code, kExitOk) << ra.err;
  EXPECT_EQ(ra.out, rb.out);
  EXPECT_EQ(ra.out, rc.out);
}

TEST(Cli, RiskRatioBilevelOverOptimizedUnrollingAtLeastOne) {
  for (const char* sigma : {"0.9", "0.1"}) {
    const auto inv = invoke({"sweep", "--quantity", "risk-ratio", "--numerator", "bilevel", "--denominator",
                             "unrolling-opt", "--model", "const", "iid", "--n", "20", "--mu", "1", "--theta", "0.2",
                             "0.5", "--sigma", sigma, "--k", "1:20", "--n-steps", "2"});
    ASSERT_EQ(inv.code, kExitOk) << inv.err;
    const auto rows = parse_csv(inv.out);
    const auto col = std::find(rows[0].begin(), rows[0].end(), "ratio") - rows[0].begin();
    for (std::size_t i = 1; i < rows.size(); ++i)
      EXPECT_GE(parse_double(rows[i][static_cast<std::size_t>(col)]), 1.0 - 1e-12) << sigma << " row " << i;
  }
}

TEST(Cli, SweepJsonIsSelfDescribing) {
  const auto inv = invoke({"--format", "json", "sweep", "--quantity", "optimal-omega", "--n", "2", "--k", "1", "2"});
  ASSERT_EQ(inv.code, kExitOk) << inv.err;
  const auto j = nlohmann::json::parse(inv.out);
  EXPECT_EQ(j.at("quantity"), "optimal-omega");
  EXPECT_EQ(j.at("rows").size(), 2u);
  EXPECT_EQ(j.at("rows")[1].at("shape"), "interval");
}

TEST(Cli, VerifySuites) {
  const auto bad = invoke({"verify", "nonexistent"});
  EXPECT_EQ(bad.code, kExitUsage);
  EXPECT_NE(bad.err.find("nonexistent"), std::string::npos);
  const auto list = invoke({"verify", "--list"});
  EXPECT_NE(list.out.find("mc-risk"), std::string::npos);
  const auto mc = invoke({"--seed", "7", "verify", "--suite", "mc-risk"});
  EXPECT_EQ(mc.code, kExitOk) << mc.err;
  const auto j = nlohmann::json::parse(mc.out);
  EXPECT_GE(j.at("checks_passed").get<int>(), 47);
  EXPECT_EQ(j.at("checks_total"), 50);
  EXPECT_EQ(invoke({"verify", "unrolling-optimal-small"}).code, kExitOk);
}

TEST(Cli, SuiteReportFailsBelowRequired) {
  SuiteReport r;
  r.required = 2;
  r.checks = {{"a", 0, 1, true}, {"b", 2, 1, false}};
  EXPECT_FALSE(r.passed());
  r.required = 1;
  EXPECT_TRUE(r.passed());
}

TEST(Cli, ConfigFileWithOverrides) {
  const fs::path cfg = temp_path("config.json");
  {
    std::ofstream out(cfg);
    out << R"({"format": "json", "c-constant": {"n-steps": 3, "omega": 0.1}})";
  }
  const auto from_file = invoke({"--config", cfg.string(), "c-constant"});
  ASSERT_EQ(from_file.code, kExitOk) << from_file.err;
  EXPECT_EQ(nlohmann::json::parse(from_file.out).at("omega"), 0.1);
  const auto overridden = invoke({"--config", cfg.string(), "c-constant", "--omega", "1.8"});
  ASSERT_EQ(overridden.code, kExitOk) << overridden.err;
  EXPECT_EQ(nlohmann::json::parse(overridden.out).at("omega"), 1.8);
}

TEST(Cli, ConfigFileLists) {
  const fs::path cfg = temp_path("sweep.json");
  {
    std::ofstream out(cfg);
    out << R"({"sweep": {"quantity": "bilevel", "n": [3], "k": ["1:3"], "model": ["iid"]}})";
  }
  const auto inv = invoke({"--config", cfg.string(), "sweep"});
  ASSERT_EQ(inv.code, kExitOk) << inv.err;
  EXPECT_EQ(parse_csv(inv.out).size(), 4u);
}

TEST(Cli, BadConfigIsReported) {
  const fs::path cfg = temp_path("broken.json");
  {
    std::ofstream out(cfg);
    out << "{not json";
  }
  EXPECT_EQ(invoke({"--config", cfg.string(), "verify", "--list"}).code, kExitUsage);
  EXPECT_EQ(invoke({"--config", temp_path("absent.json").string(), "verify", "--list"}).code, kExitIo);
}

TEST(Cli, OutFileAndIoErrors) {
  const fs::path out = temp_path("c.json");
  const auto inv = invoke({"--out", out.string(), "c-constant", "--n-steps", "3", "--omega", "0.5"});
  ASSERT_EQ(inv.code, kExitOk) << inv.err;
  EXPECT_TRUE(inv.out.empty());
  EXPECT_EQ(nlohmann::json::parse(read_file(out)).at("N"), 3);
  const auto bad = invoke({"--out", "/nonexistent-dir/x.json", "c-constant", "--n-steps", "3", "--omega", "0.5"});
  EXPECT_EQ(bad.code, kExitIo);
  EXPECT_EQ(invoke({"train", "--input", temp_path("missing.csv").string(), "--n", "4"}).code, kExitIo);
}

TEST(Cli, BestRiskWritesRegularizer) {
  const fs::path r = temp_path("best_r.csv");
  const auto inv = invoke({"best-risk", "--class", "bilevel", "--model", "iid", "--n", "3", "--k", "2", "--theta",
                           "0.8", "--sigma", "0.5", "--regularizer-out", r.string()});
  ASSERT_EQ(inv.code, kExitOk) << inv.err;
  const auto j = nlohmann::json::parse(inv.out);
  EXPECT_TRUE(j.at("attained").get<bool>());
  EXPECT_EQ(load_regularizer(r).k(), 2);
  const auto cons = invoke({"best-risk", "--class", "bilevel", "--n", "3", "--k", "1", "--regularizer-out", r.string()});
  EXPECT_EQ(cons.code, kExitUsage);
}

TEST(Cli, OptimalOmegaJson) {
  const auto inv = invoke({"optimal-omega", "--n", "2", "--k", "1", "--mu", "1", "--theta", "0", "--sigma", "1",
                           "--n-steps", "2"});
  ASSERT_EQ(inv.code, kExitOk) << inv.err;
  const auto j = nlohmann::json::parse(inv.out);
  EXPECT_NEAR(j.at("lower").get<double>(), 1 - std::sqrt(1.0 / 3.0), 1e-15);
  EXPECT_NEAR(j.at("risk").get<double>(), 1.0 / 3.0, 1e-15);
}

TEST(Cli, TrainSyntheticAndDepthSweep) {
  const fs::path trace = temp_path("trace.csv");
  const auto one = invoke({"--seed", "3", "train", "--k", "1", "--n", "4", "--n-steps", "2", "--omega", "0.5",
                           "--iterations", "50", "--frames", "100", "--trace", trace.string()});
  ASSERT_EQ(one.code, kExitOk) << one.err;
  const auto j = nlohmann::json::parse(one.out);
  EXPECT_EQ(j.at("mode"), "fixed");
  EXPECT_EQ(j.at("train_frames"), 80);
  EXPECT_EQ(parse_csv(read_file(trace)).size(), 51u);
  const auto sweep = invoke({"--seed", "3", "train", "--k", "1", "--n", "4", "--depths", "1", "2", "--iterations",
                             "20", "--frames", "100"});
  ASSERT_EQ(sweep.code, kExitOk) << sweep.err;
  const auto rows = parse_csv(sweep.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0][0], "N");
  EXPECT_EQ(rows[2][1], "learned");
}

TEST(Cli, IdenticalCommandsGiveIdenticalFiles) {
  const fs::path a = temp_path("det_a.csv"), b = temp_path("det_b.csv");
  const std::vector<std::string> args{"sweep", "--quantity", "risk-ratio", "--numerator", "linear", "--denominator",
                                      "unrolling", "--n", "5", "--k", "1:5", "--n-steps", "1:4", "--omega", "0.4"};
  auto with_a = args, with_b = args;
  with_a.insert(with_a.begin(), {"--out", a.string()});
  with_b.insert(with_b.begin(), {"--out", b.string()});
  ASSERT_EQ(invoke(with_a).code, kExitOk);
  ASSERT_EQ(invoke(with_b).code, kExitOk);
  EXPECT_EQ(read_file(a), read_file(b));
}
