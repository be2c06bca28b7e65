#include "chibag/cli.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using chibag::cli::json;
namespace cli = chibag::cli;
namespace fs = std::filesystem;

namespace {

struct CliOutput {
    int code = -1;
    std::string out;
};

CliOutput run_cli(const std::string& args)
{
    const std::string cmd = std::string(CHIBAG_CLI_PATH) + " " + args + " 2>/dev/null";
    CliOutput r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    size_t got;
    while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "chibag_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

void write(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

} // namespace

TEST(CliBinary, VerifyCliffordPasses)
{
    const CliOutput r = run_cli("verify-clifford --n 4");
    ASSERT_EQ(r.code, cli::exit_pass) << r.out;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["schema"], 1);
    EXPECT_EQ(j["command"], "verify-clifford");
    EXPECT_EQ(j["deterministic"], true);
    EXPECT_EQ(j["config"]["parameters"]["n"], 4);
    EXPECT_EQ(j["pass"], true);
    EXPECT_FALSE(j.contains("timestamp"));
}

TEST(CliBinary, RepeatRunsAreByteIdentical)
{
    const CliOutput a = run_cli("verify-killing --n 3 --sign minus --points 9");
    const CliOutput b = run_cli("verify-killing --n 3 --sign minus --points 9");
    ASSERT_EQ(a.code, cli::exit_pass) << a.out;
    EXPECT_EQ(a.out, b.out);
}

TEST(CliBinary, ConfigFileAndFlagOverride)
{
    const fs::path cfg = scratch("killing.json");
    write(cfg, R"({"command": "verify-killing", "parameters": {"n": 2, "points": 7}})");
    const CliOutput r = run_cli("verify-killing --config " + cfg.string() + " --sign minus");
    ASSERT_EQ(r.code, cli::exit_pass) << r.out;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["config"]["parameters"]["points"], 7);
    EXPECT_EQ(j["config"]["parameters"]["sign"], "minus");
    // the embedded config reproduces the run
    const fs::path again = scratch("again.json");
    write(again, j["config"].dump());
    const CliOutput r2 = run_cli("verify-killing --config " + again.string());
    EXPECT_EQ(r2.out, r.out);
}

TEST(CliBinary, OutputFileAndCsv)
{
    const fs::path out = scratch("expand.csv");
    fs::remove(out);
    const CliOutput r = run_cli("expand-check --chart synthetic --samples 2 --format csv -o " + out.string());
    ASSERT_EQ(r.code, cli::exit_pass) << r.out;
    EXPECT_EQ(r.out.rfind("r,W,Z,T,H\n", 0), 0u);
    std::ifstream in(out);
    const std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(file, r.out);
}

TEST(CliBinary, UsageErrors)
{
    EXPECT_EQ(run_cli("").code, cli::exit_usage);
    EXPECT_EQ(run_cli("no-such-command").code, cli::exit_usage);
    EXPECT_EQ(run_cli("verify-clifford --bogus 1").code, cli::exit_usage);
    EXPECT_EQ(run_cli("verify-clifford --n three").code, cli::exit_usage);
    EXPECT_EQ(run_cli("verify-killing --sign sideways").code, cli::exit_usage);
    EXPECT_EQ(run_cli("scan --eps 0.1,0.05").code, cli::exit_usage);
    const fs::path cfg = scratch("unknown.json");
    write(cfg, R"({"command": "verify-clifford", "parameters": {"n": 3, "colour": "red"}})");
    EXPECT_EQ(run_cli("verify-clifford --config " + cfg.string()).code, cli::exit_usage);
    EXPECT_EQ(run_cli("verify-killing --config " + cfg.string()).code, cli::exit_usage);
}

TEST(CliBinary, FailingVerdictExitsWithOne)
{
    // the surface family misses its volume budget at these parameters
    const CliOutput r = run_cli("surface2d --eps 0.2,0.1,0.05");
    EXPECT_EQ(r.code, cli::exit_fail) << r.out;
    EXPECT_EQ(json::parse(r.out)["pass"], false);
}

TEST(CliConfig, ValidatedParametersFillDefaults)
{
    cli::RunConfig c;
    c.command = "scan";
    c.parameters = json::object();
    const json p = cli::validated_parameters(c);
    EXPECT_EQ(p["n"], 2);
    EXPECT_DOUBLE_EQ(p["delta"].get<double>(), 0.5);
    EXPECT_EQ(p["eps"].size(), 4u);
    c.parameters = {{"n", "two"}};
    EXPECT_THROW(cli::validated_parameters(c), cli::UsageError);
    c.command = "teleport";
    EXPECT_THROW(cli::validated_parameters(c), cli::UsageError);
}

TEST(CliConfig, RejectsUnknownTopLevelKeys)
{
    EXPECT_THROW(cli::config_from_json(json::parse(R"({"command": "scan", "seed": 4})")), cli::UsageError);
    const cli::RunConfig c =
        cli::config_from_json(json::parse(R"({"command": "scan", "parameters": {}, "format": "csv"})"));
    EXPECT_EQ(c.format, "csv");
}
