#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "heuler/scenario.hpp"
#include "oracles.hpp"

using namespace heuler;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarioDir = HEULER_SCENARIO_DIR;

std::string config_error(const std::string& text) {
    try {
        (void)parse_scenario(text, "bad.yaml");
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
        return e.what();
    }
    ADD_FAILURE() << "config was accepted";
    return {};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("heuler_scenario_" + name);
    fs::remove_all(dir);
    return dir;
}

const std::string kValid = R"(scenario:
  name: t
  tag: Thm1ii
domain:
  a: 1
  b: 2
  theta0: 1
family:
  kind: TanFamily
  v: 1
  p: 0
  C: 0.2
)";

}  // namespace

TEST(ParseExpr, ArithmeticAndConstants) {
    EXPECT_DOUBLE_EQ(parse_expr("pi/2"), oracle::pi / 2);
    EXPECT_DOUBLE_EQ(parse_expr("-2/pi^2"), -2.0 / (oracle::pi * oracle::pi));
    EXPECT_DOUBLE_EQ(parse_expr("1 + 2 * 3"), 7.0);
    EXPECT_DOUBLE_EQ(parse_expr("(1 + 2) * 3"), 9.0);
    EXPECT_DOUBLE_EQ(parse_expr("2^3^2"), 512.0);
    EXPECT_DOUBLE_EQ(parse_expr("1e-3"), 1e-3);
    EXPECT_TRUE(std::isinf(parse_expr("inf")));
    EXPECT_THROW((void)parse_expr("1 +"), Error);
    EXPECT_THROW((void)parse_expr("pie"), Error);
}

TEST(ParseScenario, ValidConfigFillsDefaults) {
    const auto sc = parse_scenario(kValid);
    EXPECT_EQ(sc.tag, TheoremCase::Thm1ii);
    EXPECT_EQ(sc.n_s, 64);
    EXPECT_EQ(sc.out_dir, fs::path("out/t"));
    ASSERT_TRUE(sc.family.has_value());
    EXPECT_DOUBLE_EQ(std::get<TanParams>(*sc.family).C, 0.2);
}

TEST(ParseScenario, ThetaOutOfRangeNamesLineAndField) {
    std::string text = kValid;
    text.replace(text.find("theta0: 1"), 9, "theta0: 3*pi");
    const auto msg = config_error(text);
    EXPECT_NE(msg.find("bad.yaml:7"), std::string::npos) << msg;
    EXPECT_NE(msg.find("domain.theta0"), std::string::npos) << msg;
}

TEST(ParseScenario, UnknownTagIsRejected) {
    std::string text = kValid;
    text.replace(text.find("Thm1ii"), 6, "Thm9");
    EXPECT_NE(config_error(text).find("scenario.tag"), std::string::npos);
}

TEST(ParseScenario, WrongDomainForTagIsRejected) {
    std::string text = kValid;
    text.replace(text.find("b: 2"), 4, "b: 3");
    EXPECT_NE(config_error(text).find("requires"), std::string::npos);
}

TEST(ParseScenario, UnknownSectionIsRejected) {
    EXPECT_NE(config_error(kValid + "extras:\n  x: 1\n").find("extras"), std::string::npos);
}

TEST(ParseScenario, MissingFamilyIsRejected) {
    const std::string text = "scenario:\n  name: t\n  tag: Thm1ii\n";
    EXPECT_NE(config_error(text).find("family"), std::string::npos);
}

TEST(ParseScenario, JsonInputIsAccepted) {
    const auto sc = parse_scenario(
        R"({"scenario": {"name": "j", "tag": "Cor1"}, "shooting": {"c": 1, "p": -1, "f0_min": -2, "f0_max": 2, "f0_count": 5}})");
    EXPECT_EQ(sc.tag, TheoremCase::Cor1);
    ASSERT_TRUE(sc.shooting.has_value());
    EXPECT_EQ(sc.shooting->f0_count, 5);
}

TEST(ShippedScenarios, AllParseAndCoverEveryTag) {
    std::set<TheoremCase> tags;
    int count = 0;
    for (const auto& entry : fs::directory_iterator(kScenarioDir)) {
        SCOPED_TRACE(entry.path().string());
        const auto sc = load_scenario(entry.path());
        tags.insert(sc.tag);
        ++count;
    }
    EXPECT_GE(count, 15);
    for (const auto& [tag, name] : kTheoremCaseNames) EXPECT_TRUE(tags.count(tag)) << name;
}

TEST(RunScenario, RadialScenarioPasses) {
    auto sc = load_scenario(kScenarioDir / "thm1i_radial.yaml");
    sc.refine.clear();
    sc.out_dir = scratch("thm1i");
    const auto out = run_scenario(sc);
    EXPECT_EQ(out.code, ExitCode::Pass) << out.message;
    EXPECT_TRUE(out.report.passed());
    EXPECT_FALSE(out.report.checks().empty());
    const auto j = nlohmann::json::parse(slurp(sc.out_dir / "report.json"));
    EXPECT_EQ(j.at("exit_code"), 0);
    EXPECT_EQ(j.at("scenario").at("tag"), "Thm1i");
    fs::remove_all(sc.out_dir);
}

TEST(RunScenario, ShootingFindsTwoPeriodicMembers) {
    auto sc = load_scenario(kScenarioDir / "cor1_shooting.yaml");
    sc.out_dir = scratch("cor1");
    const auto out = run_scenario(sc);
    EXPECT_EQ(out.code, ExitCode::Pass) << out.message;
    const auto j = nlohmann::json::parse(slurp(sc.out_dir / "report.json"));
    EXPECT_EQ(j.at("shooting").at("periodic_count"), 2);
    EXPECT_TRUE(fs::exists(sc.out_dir / "shooting.json"));
    EXPECT_TRUE(fs::exists(sc.out_dir / "periodic_0.csv"));
    EXPECT_TRUE(fs::exists(sc.out_dir / "periodic_1.csv"));
    fs::remove_all(sc.out_dir);
}

TEST(RunScenario, FailedCheckGivesAssertionExit) {
    auto sc = load_scenario(kScenarioDir / "cor1_shooting.yaml");
    sc.shooting->expected_periodic = 3;
    sc.out_dir = scratch("cor1_fail");
    EXPECT_EQ(run_scenario(sc).code, ExitCode::AssertionFail);
    fs::remove_all(sc.out_dir);
}

TEST(RunScenario, NonConvergenceGivesNumericalExit) {
    auto sc = load_scenario(kScenarioDir / "thm2_a1_cospower.yaml");
    sc.refine.clear();
    sc.certify_g = false;
    sc.max_iter = 1;
    sc.out_dir = scratch("thm2_cap");
    const auto out = run_scenario(sc);
    EXPECT_EQ(out.code, ExitCode::NumericalFailure);
    fs::remove_all(sc.out_dir);
}

TEST(RunScenario, ReportsAreDeterministic) {
    auto sc = load_scenario(kScenarioDir / "thm1ii_tan.yaml");
    sc.refine.clear();
    sc.certify_g = false;
    sc.out_dir = scratch("det_a");
    (void)run_scenario(sc);
    const auto a = slurp(sc.out_dir / "report.json");
    fs::remove_all(sc.out_dir);
    sc.out_dir = scratch("det_b");
    (void)run_scenario(sc);
    const auto b = slurp(sc.out_dir / "report.json");
    fs::remove_all(sc.out_dir);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, b);
}
