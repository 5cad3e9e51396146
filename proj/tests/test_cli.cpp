#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "cclb_cli/cli.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cclb::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string value_column(const std::string& csv) {
  // Second line, seventh field.
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  std::istringstream fields(row);
  std::string field;
  for (int i = 0; i < 7; ++i) std::getline(fields, field, ',');
  return field;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, BoundsValues) {
  auto r = run({"bounds", "--fn", "corpus:EQ,1", "--eps", "0", "--bound", "prt"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::stod(value_column(r.out)), 4.0);
  r = run({"bounds", "--fn", "corpus:CONST,1", "--eps", "0.1", "--bound", "bprt"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NEAR(std::stod(value_column(r.out)), 0.9, 1e-9);
  r = run({"bounds", "--fn", "corpus:CONST,1", "--eps", "0.1", "--bound", "bprt", "--rational"});
  EXPECT_EQ(value_column(r.out), "9/10");
}

TEST(Cli, EveryBoundKind) {
  const auto r = run({"bounds", "--fn", "corpus:AND", "--bound", "prt,bprt,bprt-mu,srec,rect,disc", "--eps", "0.1"});
  EXPECT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  int rows = -1;
  while (std::getline(lines, line)) ++rows;
  EXPECT_GE(rows, 6);
}

TEST(Cli, BadInputs) {
  EXPECT_EQ(run({"bounds", "--fn", "missing.fn", "--bound", "prt"}).code, 2);
  EXPECT_EQ(run({"bounds", "--fn", "corpus:EQ,1", "--eps", "1.5"}).code, 2);
  EXPECT_EQ(run({"bounds", "--fn", "corpus:EQ,1", "--bound", "nope"}).code, 2);
  EXPECT_EQ(run({"bounds", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run({"compress", "--prot", "corpus:trivial_const", "--delta", "1.5"}).code, 2);
  EXPECT_EQ(run({"compress", "--prot", "corpus:trivial_const", "--override", "3,x,1"}).code, 2);
  EXPECT_EQ(run({"bounds", "--fn", "corpus:EQ,4"}).code, 3);
  EXPECT_EQ(run({"compress", "--fn", "corpus:CONST,1", "--prot", "corpus:trivial_const", "--override", "3,5000000,2"}).code, 3);
}

TEST(Cli, InformationCost) {
  const auto r = run({"ic", "--prot", "corpus:noisy_bit,1/4"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header.rfind("ic,", 0), 0u);
  EXPECT_NEAR(std::stod(row.substr(0, row.find(','))), 0.188722, 1e-6);
  const auto send = run({"ic", "--prot", "corpus:send_x,1", "--fn", "corpus:EQ,1"});
  EXPECT_NEAR(std::stod(send.out.substr(send.out.find('\n') + 1)), 1.0, 1e-12);
}

TEST(Cli, CompressPaperExact) {
  const auto r = run({"compress", "--fn", "corpus:CONST,1", "--prot", "corpus:trivial_const", "--paper-exact",
                      "--delta", "0.9"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("*,*,"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, CompressOverrideFailureExitsOne) {
  const auto r = run({"compress", "--fn", "corpus:CONST,1", "--prot", "corpus:trivial_const", "--override", "1,1,0",
                      "--delta", "0.1"});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, MonteCarloIsDeterministic) {
  const std::vector<std::string> args{"compress", "--fn",      "corpus:CONST,1", "--prot", "corpus:trivial_const",
                                      "--mode",   "mc",        "--override",     "2,8,1",  "--samples",
                                      "5000",     "--seed",    "3"};
  const auto a = run(args), b = run(args);
  EXPECT_EQ(a.code, b.code);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("seed=3"), std::string::npos);
}

TEST(Cli, OutFileIsWrittenAtomically) {
  const std::string path = ::testing::TempDir() + "cclb_cli_out.csv";
  std::remove(path.c_str());
  const auto r = run({"bounds", "--fn", "corpus:EQ,1", "--bound", "prt", "--out", path});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(std::stod(value_column(slurp(path))), 4.0);
  // A failing run leaves the previous file untouched.
  EXPECT_EQ(run({"bounds", "--fn", "corpus:EQ,4", "--out", path}).code, 3);
  EXPECT_EQ(std::stod(value_column(slurp(path))), 4.0);
  std::remove(path.c_str());
}

TEST(Cli, VerifyChainAndPerturbation) {
  auto r = run({"verify", "--only", "chain"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS chain"), std::string::npos);
  EXPECT_NE(r.out.find("1 of 1 checks passed"), std::string::npos);
  r = run({"verify", "--only", "chain", "--self-test-perturb"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("FAIL chain"), std::string::npos);
  EXPECT_EQ(run({"verify", "--only", "nonexistent"}).code, 2);
}

TEST(Cli, ExecutableExitCodes) {
  const std::string tool = CCLB_TOOL_PATH;
  auto status = [&](const std::string& args) {
    const int s = std::system((tool + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("bounds --fn corpus:EQ,1 --bound prt"), 0);
  EXPECT_EQ(status("bounds --fn missing.fn --bound prt"), 2);
  EXPECT_EQ(status("bounds --fn corpus:EQ,4"), 3);
  EXPECT_EQ(status("--help"), 0);
}
