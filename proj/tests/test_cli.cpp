#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string output;  // stdout and stderr
};

Result cli(const std::string& args) {
    const std::string cmd = std::string(CDREADOUT_PATH) + " " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    std::array<char, 512> buf{};
    while (pipe && fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
    const int status = pipe ? pclose(pipe) : -1;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "cdr_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    return dir;
}

fs::path write_config(const std::string& name, const nlohmann::json& j) {
    const auto p = fs::temp_directory_path() / "cdr_cli_tests" / (name + ".json");
    fs::create_directories(p.parent_path());
    std::ofstream(p) << j.dump(2);
    return p;
}

const std::string kConfigs = CDR_CONFIG_DIR;

}  // namespace

TEST(Cli, MissingKappaExitsWithConfigError) {
    auto j = nlohmann::json::parse(slurp(kConfigs + "/fig2b.json"));
    j["system"].erase("kappa_hz");
    const auto r = cli("run --config " + write_config("nokappa", j).string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("kappa_hz"), std::string::npos) << r.output;
}

TEST(Cli, NumericalFailureExitsTwoAndNamesOperation) {
    auto j = nlohmann::json::parse(slurp(kConfigs + "/figS2.json"));
    j["experiment"]["dt_s"] = 1e-8;
    const auto r = cli("run --config " + write_config("coarse", j).string() + " --out " + scratch("coarse").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("cavitydyn.evolve_"), std::string::npos) << r.output;
}

TEST(Cli, BadArgumentsExitOne) {
    EXPECT_EQ(cli("run").code, 1);
    EXPECT_EQ(cli("run --config x.json --format xml").code, 1);
    EXPECT_EQ(cli("run --config /nonexistent/cfg.json").code, 1);
    EXPECT_EQ(cli("--version").code, 0);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
    const auto cfg = kConfigs + "/fig2d.json";
    const auto a = scratch("rep_a"), b = scratch("rep_b");
    ASSERT_EQ(cli("run --config " + cfg + " --seed 5 --threads 1 --out " + a.string()).code, 0);
    ASSERT_EQ(cli("run --config " + cfg + " --seed 5 --threads 3 --out " + b.string()).code, 0);
    for (const char* f : {"histogram.csv", "summary.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;

    const auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
    EXPECT_EQ(m.at("tool"), "cdreadout");
    EXPECT_EQ(m.at("seed"), 5);
    EXPECT_EQ(m.at("config_sha256").get<std::string>().size(), 64u);
    EXPECT_TRUE(m.at("wall_time_s").is_number());
    EXPECT_EQ(m.at("config").at("seed"), 5);
    EXPECT_EQ(m.at("config_sha256"), nlohmann::json::parse(slurp(b / "manifest.json")).at("config_sha256"));

    // The manifest re-runs to the same results.
    const auto c = scratch("rep_c");
    ASSERT_EQ(cli("run --config " + (a / "manifest.json").string() + " --out " + c.string()).code, 0);
    EXPECT_EQ(slurp(a / "histogram.csv"), slurp(c / "histogram.csv"));
}

TEST(Cli, CsvHeaderAndJsonFormat) {
    const auto a = scratch("fmt_csv"), b = scratch("fmt_json");
    ASSERT_EQ(cli("run --config " + kConfigs + "/fig2b.json --out " + a.string()).code, 0);
    EXPECT_EQ(slurp(a / "snr.csv").substr(0, 36), "tau_s,kappa_tau,snr,snr_closed_form\n");
    ASSERT_EQ(cli("run --config " + kConfigs + "/fig2b.json --format json --out " + b.string()).code, 0);
    const auto t = nlohmann::json::parse(slurp(b / "snr.json"));
    EXPECT_EQ(t.at("rows").size(), 60u);

    const auto r = cli("compare " + a.string() + " " + b.string());
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("crossovers: none"), std::string::npos) << r.output;
}

TEST(Cli, CompareReportsCrossoverAndGridMismatch) {
    const auto a = scratch("cmp_long"), b = scratch("cmp_disp"), out = scratch("cmp_out");
    ASSERT_EQ(cli("run --config " + kConfigs + "/fig2b.json --out " + a.string()).code, 0);
    ASSERT_EQ(cli("run --config " + kConfigs + "/fig2b_dispersive.json --out " + b.string()).code, 0);
    const auto r = cli("compare " + a.string() + " " + b.string() + " --out " + out.string());
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("run A dominates up to"), std::string::npos) << r.output;
    EXPECT_TRUE(fs::exists(out / "compare.csv"));

    auto j = nlohmann::json::parse(slurp(kConfigs + "/fig2b.json"));
    j["experiment"]["points"] = 20;
    const auto c = scratch("cmp_short");
    ASSERT_EQ(cli("run --config " + write_config("short", j).string() + " --out " + c.string()).code, 0);
    const auto bad = cli("compare " + a.string() + " " + c.string());
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.output.find("cli.compare"), std::string::npos) << bad.output;
}
