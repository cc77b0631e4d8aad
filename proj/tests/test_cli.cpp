#include <lpreg/io.hpp>

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;  // stdout and stderr together
};

CliResult cli(const std::string& args) {
  const std::string cmd = std::string("'") + LPREG_CLI_PATH + "' " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("lpreg-cli-") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return "'" + (dir_ / name).string() + "'"; }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GenerateSolveRatePipeline) {
  const CliResult r = cli("--quiet generate --seed 1 --out - | '" + std::string(LPREG_CLI_PATH) +
                    "' --quiet solve --algo pga --problem - --trace-out - | '" +
                    std::string(LPREG_CLI_PATH) + "' --quiet rate --trace -");
  ASSERT_EQ(r.code, 0) << r.out;
  const lpreg::json j = lpreg::json::parse(r.out);
  EXPECT_GT(j["eta_hat"].get<double>(), 0.0);
  EXPECT_LT(j["eta_hat"].get<double>(), 1.0);
  EXPECT_TRUE(j["linear"].get<bool>());
}

TEST_F(CliTest, StepsizeViolationCitesBound) {
  ASSERT_EQ(cli("--quiet generate --seed 1 --out " + path("p.json")).code, 0);
  const CliResult r = cli("solve --problem " + path("p.json") + " --v 10");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("1/2 ||A||^-2"), std::string::npos) << r.out;
}

TEST_F(CliTest, CertifyPointOnZero) {
  std::ofstream(dir_ / "p.json") << R"({"m":1,"n":1,"A":[[1]],"b":[2],"lambda":1,"p":0.5})";
  std::ofstream(dir_ / "x.json") << "[0]";
  const CliResult r = cli("--quiet certify-point --problem " + path("p.json") + " --point " + path("x.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(lpreg::json::parse(r.out)["classification"], "zero-point");
}

TEST_F(CliTest, CertifyPgaTrace) {
  ASSERT_EQ(cli("--quiet generate --seed 2 --out " + path("p.json")).code, 0);
  ASSERT_EQ(cli("--quiet solve --problem " + path("p.json") + " --trace-out " + path("t.csv")).code, 0);
  const CliResult r = cli("--quiet certify --problem " + path("p.json") + " --trace " + path("t.csv") +
                    " --alpha auto --beta auto");
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST_F(CliTest, MalformedProblemIsUsageError) {
  std::ofstream(dir_ / "bad.json") << "{\n\"m\": 1,\n\"A\": [[1]\n";
  const CliResult r = cli("solve --problem " + path("bad.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("line"), std::string::npos) << r.out;
}

TEST_F(CliTest, IterationLimitExitsTwo) {
  ASSERT_EQ(cli("--quiet generate --seed 1 --out " + path("p.json")).code, 0);
  EXPECT_EQ(cli("--quiet solve --problem " + path("p.json") + " --max-iters 3").code, 2);
}

TEST_F(CliTest, UnknownReproId) {
  const CliResult r = cli("repro nope");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("prox-pin"), std::string::npos);
}

TEST_F(CliTest, ReproProxPinAndReplay) {
  const CliResult r = cli("--quiet --out-dir " + path("A") + " repro prox-pin");
  ASSERT_EQ(r.code, 0) << r.out;
  ASSERT_TRUE(fs::exists(dir_ / "A" / "manifest-repro.json"));
  const CliResult rr = cli("--quiet --out-dir " + path("B") + " replay " + path("A/manifest-repro.json"));
  ASSERT_EQ(rr.code, 0) << rr.out;
  for (const char* name : {"prox-pin.csv", "prox-pin.json"}) {
    EXPECT_EQ(slurp(dir_ / "A" / name), slurp(dir_ / "B" / name)) << name;
  }
}

TEST_F(CliTest, SolveWritesManifestWithHashes) {
  ASSERT_EQ(cli("--quiet --out-dir " + path("o") + " generate --seed 3 --out p.json").code, 0);
  ASSERT_EQ(cli("--quiet --out-dir " + path("o") + " solve --problem " + path("o/p.json") +
                " --trace-out t.csv").code, 0);
  const lpreg::json m = lpreg::json::parse(slurp(dir_ / "o" / "manifest-solve.json"));
  EXPECT_EQ(m["command"], "solve");
  ASSERT_FALSE(m["inputs"].empty());
  EXPECT_EQ(m["inputs"][0]["sha256"].get<std::string>().size(), 64u);
  const CliResult rr = cli("--quiet --out-dir " + path("o2") + " replay " + path("o/manifest-solve.json"));
  EXPECT_EQ(rr.code, 0) << rr.out;
}
