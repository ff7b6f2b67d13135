#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "poprec/cli.hpp"
#include "poprec/core.hpp"

using namespace poprec;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
};

Run cli(const std::string& args) {
    const std::string cmd = std::string(POPREC_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {-1, ""};
    std::string out;
    char buf[4096];
    while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, got);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("poprec_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        const SparseDistribution d({BitString::parse("10101010"), BitString::parse("01010101")}, {0.6, 0.4});
        write_distribution(d, path("dist.json"));
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesHeaderAndManifest) {
    const auto r = cli("simulate --dist " + path("dist.json") + " --p 0.9 --samples 50 --seed 3 --out " +
                       path("t.txt"));
    ASSERT_EQ(r.code, 0) << r.out;
    std::ifstream f(path("t.txt"));
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header.rfind("#n=8", 0), 0u) << header;
    std::ifstream mf(path("t.txt") + ".manifest.json");
    ASSERT_TRUE(mf);
    const auto m = nlohmann::json::parse(mf);
    EXPECT_EQ(m.at("mode"), "simulate");
    EXPECT_EQ(m.at("seed"), 3);
    EXPECT_TRUE(m.at("versions").contains("gmp"));
}

TEST_F(CliTest, OracleCheckPasses) {
    const auto r = cli("oracle-check --n 8 --m 3");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("max_deviation"), std::string::npos);
    std::istringstream in(r.out.substr(r.out.find("max_deviation") + 13));
    double dev = 1.0;
    in >> dev;
    EXPECT_LE(dev, 1e-8);
}

TEST_F(CliTest, RecoverFixtureFromTraceFile) {
    ASSERT_EQ(cli("simulate --dist " + path("dist.json") + " --p 0.9 --samples 1000000 --seed 11 --out " +
                  path("t.txt"))
                  .code,
              0);
    const auto r = cli("recover --traces " + path("t.txt") + " --ell 2 --out " + path("r.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    std::ifstream f(path("r.json"));
    const auto j = nlohmann::json::parse(f);
    const auto got = distribution_from_json(j.at("distribution"));
    EXPECT_LE(tv_distance(got, read_distribution(path("dist.json"))), 0.1);
    EXPECT_TRUE(fs::exists(path("r.csv")));
    EXPECT_TRUE(fs::exists(path("r.json") + ".manifest.json"));
}

TEST_F(CliTest, RecoverReportsDistanceToTruth) {
    const auto r = cli("recover --dist " + path("dist.json") + " --p 0.9 --ell 2 --samples 1000000 --seed 5 --out " +
                       path("r.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto pos = r.out.find("tv_vs_truth");
    ASSERT_NE(pos, std::string::npos);
    std::istringstream in(r.out.substr(pos + 11));
    double tv = 1.0;
    in >> tv;
    EXPECT_LE(tv, 0.1);
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(cli("recover --dist " + path("dist.json") + " --p 1.5 --out " + path("r.json")).code, kExitParameter);
    EXPECT_EQ(cli("recover --dist " + path("dist.json") + " --p abc --out " + path("r.json")).code, kExitParameter);
    EXPECT_EQ(cli("nonsense").code, kExitParameter);
    EXPECT_EQ(cli("simulate --bogus 1").code, kExitParameter);
    EXPECT_EQ(cli("recover --dist " + path("nope.json") + " --p 0.9 --out " + path("r.json")).code, kExitIo);
    EXPECT_EQ(cli("simulate --dist " + path("dist.json") + " --p 0.9 --samples 5 --out " + path("no/dir/t.txt")).code,
              kExitIo);
    // Margin zero against sampled moments cannot be met.
    EXPECT_EQ(cli("distinguish --dist " + path("dist.json") + " --p 0.9 --ell 2 --samples 2000 --margin 0 --noise-z 0 "
                  "--grid-points 5 --out " + path("d.json"))
                  .code,
              kExitRecovery);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
    {
        std::ofstream c(path("run.conf"));
        c << "# fixture\np = 0.9\nsamples = 7\nseed = 4   # trailing comment\n";
    }
    ASSERT_EQ(cli("simulate --config " + path("run.conf") + " --dist " + path("dist.json") + " --samples 12 --out " +
                  path("t.txt"))
                  .code,
              0);
    std::ifstream f(path("t.txt"));
    std::string line;
    int rows = 0;
    std::getline(f, line);
    EXPECT_NE(line.find("seed=4"), std::string::npos) << line;
    while (std::getline(f, line)) rows += !line.empty();
    EXPECT_EQ(rows, 12);

    {
        std::ofstream c(path("bad.conf"));
        c << "colour = blue\n";
    }
    EXPECT_EQ(cli("simulate --config " + path("bad.conf") + " --dist " + path("dist.json") + " --p 0.9 --out " +
                  path("t.txt"))
                  .code,
              kExitParameter);
    EXPECT_EQ(cli("simulate --config " + path("missing.conf")).code, kExitIo);
}

TEST(CliInProcess, VersionAndHelp) {
    EXPECT_EQ(run({"poprec", "--version"}), kExitOk);
    EXPECT_EQ(run({"poprec"}), kExitParameter);
}
