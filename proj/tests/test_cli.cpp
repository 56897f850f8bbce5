#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run_cli(const std::string& args) {
    const fs::path capture = fs::temp_directory_path() / ("wtv_cli_" + std::to_string(::getpid()) + ".out");
    const std::string cmd = std::string("\"") + WTV_CLI_PATH + "\" " + args + " > \"" + capture.string() + "\" 2>/dev/null";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(capture);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    fs::remove(capture);
    return r;
}

std::string example(const std::string& name) { return std::string("\"") + WTV_EXAMPLES_DIR + "/" + name + "\""; }

}  // namespace

TEST(Cli, DistPrintsADistanceResult) {
    const auto r = run_cli("dist --a " + example("normal.json") + " --b " + example("normal_shifted.json") + " --metric wq");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["value"].get<double>(), 0.5, 1e-9);
    EXPECT_EQ(j["method"], "quantile-quadrature");
}

TEST(Cli, DistOnAtomSetsUsesExactTransport) {
    const auto r = run_cli("dist --a " + example("atoms_a.json") + " --b " + example("atoms_b.json") + " --metric wq");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(nlohmann::json::parse(r.out)["method"], "exact-ot");
    EXPECT_EQ(run_cli("dist --a " + example("atoms_a.json") + " --b " + example("atoms_b.json") + " --metric tv").code, 2);
}

TEST(Cli, EnvelopeAndCertify) {
    auto r = run_cli("envelope --input " + example("mixture_2d.json") + " --K 2 --L 3");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(nlohmann::json::parse(r.out)["entries"].size(), 12u);
    r = run_cli("certify --a " + example("normal.json") + " --b " + example("normal_shifted.json") + " --regime lemma1");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j["satisfied"].get<bool>());
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run_cli("dist --a " + example("normal.json")).code, 2);
    EXPECT_EQ(run_cli("certify --a " + example("normal.json") + " --b " + example("normal.json") + " --eps 1.5").code, 2);
    EXPECT_EQ(run_cli("sweep --scenario " + example("invalid_h.json")).code, 2);
    EXPECT_EQ(run_cli("frobnicate").code, 2);
    EXPECT_EQ(run_cli("--help").code, 0);
}

TEST(Cli, SweepWritesReports) {
    const fs::path dir = fs::temp_directory_path() / "wtv_cli_sweep";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path scenario = dir / "one.json";
    {
        auto all = nlohmann::json::parse(std::ifstream(std::string(WTV_EXAMPLES_DIR) + "/scenarios.json"));
        std::ofstream(scenario) << all[0].dump();
    }
    const auto r = run_cli("sweep --scenario \"" + scenario.string() + "\" --out \"" + (dir / "out").string() + "\"");
    EXPECT_EQ(r.code, 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "out")) files += e.is_regular_file() ? 1 : 0;
    EXPECT_EQ(files, 3u);
    fs::remove_all(dir);
}
