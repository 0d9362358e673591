#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cqds/csv.hpp"
#include "cqds/scenario.hpp"

using namespace cqds;
namespace fs = std::filesystem;

namespace {

Scenario parse(const std::string& text) {
    std::istringstream in(text);
    return Scenario::parse(in, "test.ini");
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

int cli(const std::string& args) {
    const int status = std::system((std::string(CQDS_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("cqds_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(Scenario, DefaultsAndOverrides) {
    const Scenario s = parse("# comment\n[protocol]\nrounds = 1234  ; trailing\n\n[twinfield]\nmode = tagged\n");
    EXPECT_EQ(s.integer("protocol", "rounds"), 1234u);
    EXPECT_EQ(s.text("twinfield", "mode"), "tagged");
    EXPECT_DOUBLE_EQ(s.real("twinfield", "misalignment"), 0.03);
    EXPECT_EQ(s.reals("attack", "repudiation_taus").size(), 4u);
}

TEST(Scenario, RejectsUnknownKeysWithLineNumbers) {
    try {
        parse("[protocol]\nrounds = 10\nbogus = 1\n");
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.line(), 3);
        EXPECT_NE(std::string(e.what()).find("test.ini:3"), std::string::npos);
    }
    EXPECT_THROW(parse("[nowhere]\n"), SchemaError);
    EXPECT_THROW(parse("rounds = 3\n"), SchemaError);
    EXPECT_THROW(parse("[protocol]\nrounds = -3\n"), SchemaError);
    EXPECT_THROW(parse("[protocol]\nreflectivity = half\n"), SchemaError);
    EXPECT_THROW(parse("[twinfield]\nmode = exact\n"), SchemaError);
    EXPECT_THROW(parse("[protocol\n"), SchemaError);
}

TEST(Scenario, ResolvedTextRoundTrips) {
    const Scenario s = parse("[run]\nseed = 99\n[bounds]\npoints = 7\n");
    const Scenario back = parse(s.resolved());
    EXPECT_EQ(back.resolved(), s.resolved());
    EXPECT_EQ(back.hash(), s.hash());
    EXPECT_NE(Scenario().hash(), s.hash());
}

TEST(Csv, TwelveSignificantDigits) {
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_number(1e10), "10000000000");
    std::ostringstream os;
    CsvWriter w(os, {{"seed", "1"}}, "[run]\nseed = 1\n", {"a", "b"});
    w.row({1.5, std::string("x")});
    EXPECT_EQ(os.str(), "# seed: 1\n# [run]\n# seed = 1\na,b\n1.5,x\n");
    EXPECT_THROW(w.row({1.0}), std::invalid_argument);
}

TEST(Cli, SameScenarioGivesIdenticalOutput) {
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    ASSERT_EQ(cli("bounds --seed 4 --out " + a.string()), 0);
    ASSERT_EQ(cli("bounds --seed 4 --out " + b.string()), 0);
    EXPECT_EQ(slurp(a / "fig2.csv"), slurp(b / "fig2.csv"));
    const std::string sim = " --set protocol.rounds=3000 --seed 8 --threads 2 --out ";
    ASSERT_EQ(cli("simulate" + sim + a.string()), 0);
    ASSERT_EQ(cli("simulate" + sim + b.string()), 0);
    EXPECT_EQ(slurp(a / "transcript.csv"), slurp(b / "transcript.csv"));
    EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
}

TEST(Cli, EchoedScenarioReproducesRun) {
    const auto a = scratch("echo_a");
    const auto b = scratch("echo_b");
    ASSERT_EQ(cli("twinfield --set twinfield.d_max=40 --set twinfield.d_step=20 --seed 3 --out " + a.string()), 0);
    ASSERT_EQ(cli("twinfield --config " + (a / "scenario.ini").string() + " --out " + b.string()), 0);
    const std::string fig = slurp(a / "fig4.csv");
    EXPECT_EQ(fig, slurp(b / "fig4.csv"));
    EXPECT_EQ(fig.rfind("# tool: cqds ", 0), 0u);
    EXPECT_NE(fig.find("# scenario_hash: 0x"), std::string::npos);
    EXPECT_NE(fig.find("# seed: 3"), std::string::npos);
    EXPECT_NE(fig.find("d_km,n1_lower,e1_upper,E_tot,L,R"), std::string::npos);
}

TEST(Cli, ExitCodes) {
    const auto a = scratch("codes");
    fs::create_directories(a);
    std::ofstream(a / "bad.ini") << "[protocol]\nrounds = 10\nnope = 2\n";
    EXPECT_EQ(cli("bounds --config " + (a / "bad.ini").string() + " --out " + a.string()), 2);
    EXPECT_EQ(cli("bounds --set bounds.nothing=1 --out " + a.string()), 2);
    EXPECT_EQ(cli("frobnicate"), 2);
    EXPECT_EQ(cli("simulate --set attack.eve_rate=1 --set protocol.rounds=20000 --set protocol.transcript=no --out " +
                  a.string()),
              3);
    EXPECT_EQ(cli("hilbert --out " + a.string()), 0);
}
