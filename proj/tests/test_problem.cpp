#include "wns/problem.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace wns;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string message_of(const std::string& text)
{
    try {
        parse_problem(text);
    } catch (const SpecError& e) {
        return e.what();
    }
    return "";
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("wns_test_problem_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kMinimal = R"({
  "mesh": {"mode": "uniform", "n": 4},
  "weight": {"kind": "constant"},
  "forcing": {"kind": "analytic", "expr": "zero"},
  "nu": 1.0
})";

} // namespace

TEST(Parse, Minimal)
{
    const ProblemSpec s = parse_problem(kMinimal);
    EXPECT_EQ(s.n, 4);
    EXPECT_EQ(s.mesh_mode, MeshMode::Uniform);
    ASSERT_TRUE(s.nu.has_value());
    EXPECT_DOUBLE_EQ(*s.nu, 1.0);
    EXPECT_TRUE(is_zero_forcing(s.forcing(1.0)));
    EXPECT_EQ(s.mesh().num_cells(), 32);
    EXPECT_NE(s.checksum, 0u);
}

TEST(Parse, SyntaxErrorsAreLineAnchored)
{
    const std::string bad = "{\n  \"weight\": {\"kind\": \"constant\"},\n  \"nu\": 1.0,,\n}";
    const std::string msg = message_of(bad);
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column"), std::string::npos) << msg;
    EXPECT_THROW(parse_problem("[1, 2]"), SpecError);
}

TEST(Parse, MissingRequiredField)
{
    const std::string msg = message_of(R"({"forcing": {"kind": "analytic", "expr": "zero"}, "nu": 1})");
    EXPECT_NE(msg.find("missing required field 'weight'"), std::string::npos) << msg;
    EXPECT_NE(message_of(R"({"weight": {"kind": "constant"}, "nu": 1})").find("'forcing'"), std::string::npos);
    EXPECT_NE(message_of(R"({"weight": {"kind": "constant"}, "forcing": {"kind": "analytic", "expr": "zero"}})")
                  .find("'nu'"),
              std::string::npos);
}

TEST(Parse, AlphaOutOfRange)
{
    json j = json::parse(kMinimal);
    j["weight"] = {{"kind", "radial"}, {"z", {0.5, 0.5}}, {"alpha", 2.5}};
    const std::string msg = message_of(j.dump());
    EXPECT_NE(msg.find("weight.alpha"), std::string::npos) << msg;
    EXPECT_THROW(parse_weight(json{{"kind", "radial"}, {"z", {0.5, 0.5}}, {"alpha", -2.0}}), SpecError);
}

TEST(Parse, RejectsUnknownAndBadValues)
{
    json j = json::parse(kMinimal);
    j["colour"] = "blue";
    EXPECT_NE(message_of(j.dump()).find("colour"), std::string::npos);

    j = json::parse(kMinimal);
    j["nu"] = -1.0;
    EXPECT_THROW(parse_problem(j.dump()), SpecError);
    j["nu"] = "fast";
    EXPECT_THROW(parse_problem(j.dump()), SpecError);

    j = json::parse(kMinimal);
    j["mesh"] = {{"mode", "graded"}, {"center", {0.5, 0.5}}, {"mu", 1.5}, {"base_n", 4}};
    EXPECT_THROW(parse_problem(j.dump()), SpecError);

    j = json::parse(kMinimal);
    j["forcing"] = {{"kind", "analytic"}, {"expr", "stream_function"}};
    j["nu"] = "auto";
    EXPECT_THROW(parse_problem(j.dump()), SpecError);

    j = json::parse(kMinimal);
    j["convergence"] = {{"levels", 2}};
    EXPECT_THROW(parse_problem(j.dump()), SpecError);
}

TEST(Literals, Weight)
{
    const Weight c = parse_weight(json{{"kind", "constant"}, {"c", 2.0}});
    EXPECT_DOUBLE_EQ(c(Point(0.1, 0.9)), 2.0);
    const Weight r = parse_weight(json{{"kind", "radial"}, {"z", {0.5, 0.5}}, {"alpha", 1.5}});
    EXPECT_NEAR(r(Point(0.5, 1.0)), std::pow(0.5, 1.5), 1e-15);
    EXPECT_THROW(parse_weight(json{{"kind", "gaussian"}}), SpecError);
    EXPECT_THROW(parse_weight(json{{"kind", "radial"}, {"alpha", 1.0}}), SpecError);
}

TEST(Literals, Forcing)
{
    const ForcingSpec d = parse_forcing(json{{"kind", "dirac"}, {"z", {0.3, 0.4}}, {"F", {1.0, -2.0}}}, 1.0);
    ASSERT_TRUE(std::holds_alternative<DiracForce>(d));
    EXPECT_EQ(std::get<DiracForce>(d).F, Eigen::Vector2d(1.0, -2.0));

    const ForcingSpec c = parse_forcing(
        json{{"kind", "curve"}, {"polyline", {{0.2, 0.2}, {0.8, 0.2}}}, {"density", "constant:[0.5,1]"}}, 1.0);
    ASSERT_TRUE(std::holds_alternative<CurveForce>(c));
    EXPECT_EQ(std::get<CurveForce>(c).density(0.3), Eigen::Vector2d(0.5, 1.0));
    EXPECT_THROW(parse_forcing(json{{"kind", "curve"}, {"polyline", {{0.2, 0.2}}}, {"density", "constant:[1,0]"}}, 1.0),
                 SpecError);
    EXPECT_THROW(
        parse_forcing(json{{"kind", "curve"}, {"polyline", {{0.2, 0.2}, {0.3, 0.3}}}, {"density", "linear:[1,0]"}}, 1.0),
        SpecError);

    const ForcingSpec g = parse_forcing(json{{"kind", "analytic"}, {"expr", "gravity"}}, 1.0);
    EXPECT_EQ(std::get<AnalyticForce>(g).f(Point(0.1, 0.1)), Eigen::Vector2d(0.0, -1.0));
    // the manufactured forcing depends on nu through -nu lap u
    const ForcingSpec s1 = parse_forcing(json{{"kind", "analytic"}, {"expr", "stream_function"}}, 1.0);
    const ForcingSpec s2 = parse_forcing(json{{"kind", "analytic"}, {"expr", "stream_function"}}, 0.1);
    EXPECT_NE(std::get<AnalyticForce>(s1).f(Point(0.3, 0.2)), std::get<AnalyticForce>(s2).f(Point(0.3, 0.2)));
    EXPECT_THROW(parse_forcing(json{{"kind", "analytic"}, {"expr", "sin(x)"}}, 1.0), SpecError);
}

TEST(Parse, ChecksumAndProvenance)
{
    const ProblemSpec a = parse_problem(kMinimal);
    const ProblemSpec b = parse_problem(kMinimal);
    const ProblemSpec c = parse_problem(std::string(kMinimal) + "\n");
    EXPECT_EQ(a.checksum, b.checksum);
    EXPECT_NE(a.checksum, c.checksum);
    const json p = a.provenance();
    EXPECT_TRUE(p.contains("spec_checksum"));
    EXPECT_TRUE(p.contains("seed"));
    EXPECT_EQ(p["spec_checksum"].get<std::string>().size(), 16u);
}

TEST(Runners, SolveWritesArtifacts)
{
    const fs::path dir = scratch("solve");
    json j = json::parse(kMinimal);
    j["forcing"] = {{"kind", "dirac"}, {"z", {0.4, 0.6}}, {"F", {1.0, 0.0}}};
    j["weight"] = {{"kind", "radial"}, {"z", {0.4, 0.6}}, {"alpha", 1.0}};
    j["outputs"] = {{"dir", "out"}};
    j["estimators"] = {{"c42_restarts", 1}, {"c42_iters", 30}, {"sinv_iters", 15}};
    {
        std::ofstream(dir / "spec.json") << j.dump(2);
    }
    const ProblemSpec spec = load_problem(dir / "spec.json");
    const RunResult r = run_solve(spec, true);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.summary["command"], "solve");
    for (const char* f : {"solution.json", "picard_trace.json", "constants.json"})
        ASSERT_TRUE(fs::exists(dir / "out" / f)) << f;
    const json sol = json::parse(slurp(dir / "out" / "solution.json"));
    EXPECT_EQ(sol["provenance"], spec.provenance());
    EXPECT_EQ(sol["velocity"].size(), static_cast<std::size_t>(sol["velocity_dofs"].get<int>()));
    const json cons = json::parse(slurp(dir / "out" / "constants.json"));
    EXPECT_TRUE(cons["apriori"].contains("holds"));

    const std::string first = slurp(dir / "out" / "solution.json");
    run_solve(spec, true);
    EXPECT_EQ(first, slurp(dir / "out" / "solution.json"));
    fs::remove_all(dir);
}

TEST(Runners, NonConvergenceReported)
{
    json j = json::parse(kMinimal);
    j["forcing"] = {{"kind", "dirac"}, {"z", {0.4, 0.6}}, {"F", {1e4, 0.0}}};
    j["nu"] = 1e-3;
    j["solve"] = {{"max_iters", 3}};
    j["estimators"] = {{"c42_restarts", 1}, {"c42_iters", 10}, {"sinv_iters", 5}};
    const RunResult r = run_solve(parse_problem(j.dump()), false);
    EXPECT_FALSE(r.converged);
    EXPECT_FALSE(r.summary["converged"].get<bool>());
}

TEST(Runners, ConvergenceCsvHasProvenanceLine)
{
    const fs::path dir = scratch("conv");
    json j = json::parse(kMinimal);
    j["mesh"] = {{"mode", "uniform"}, {"n", 2}};
    j["forcing"] = {{"kind", "analytic"}, {"expr", "stream_function"}};
    j["convergence"] = {{"case", "stream_function"}, {"levels", 3}};
    j["outputs"] = {{"dir", dir.string()}};
    const ProblemSpec spec = parse_problem(j.dump());
    const RunResult r = run_convergence(spec, 0, true);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.summary["levels"], 3);
    const std::string csv = slurp(dir / "convergence.csv");
    EXPECT_EQ(csv.rfind("# spec_checksum=", 0), 0u);
    EXPECT_NE(csv.find("level,h,dofs,err_u_H1w,rate_u,err_p_L2w,rate_p"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "convergence.json"));
    EXPECT_THROW(run_convergence(spec, 2, false), SpecError);
    fs::remove_all(dir);
}

TEST(Runners, WeightsAndConstants)
{
    json j = json::parse(kMinimal);
    j["weight"] = {{"kind", "radial"}, {"z", {0.5, 0.5}}, {"alpha", 0.5}};
    const ProblemSpec spec = parse_problem(j.dump());
    const RunResult w = run_weights(spec, false);
    EXPECT_FALSE(w.summary["classification"]["in_A1"].get<bool>());
    EXPECT_TRUE(w.summary["classification"]["inverse_in_A1"].get<bool>());
    EXPECT_EQ(w.summary["a2_scan"].size(), 5u);

    j["forcing"] = {{"kind", "analytic"}, {"expr", "unit_x"}};
    j["estimators"] = {{"c42_restarts", 1}, {"c42_iters", 20}, {"sinv_iters", 10}, {"seed", 7}};
    const RunResult c = run_constants(parse_problem(j.dump()), false);
    EXPECT_GT(c.summary["C42"].get<double>(), 0.0);
    EXPECT_GT(c.summary["Sinv_norm"].get<double>(), 0.0);
    EXPECT_EQ(c.summary["provenance"]["seed"], 7);
}

TEST(Runners, AutoViscosityTargetsSmallness)
{
    json j = json::parse(kMinimal);
    j["forcing"] = {{"kind", "dirac"}, {"z", {0.5, 0.5}}, {"F", {1.0, 0.0}}};
    j["nu"] = "auto";
    j["estimators"] = {{"c42_restarts", 1}, {"c42_iters", 30}, {"sinv_iters", 15}};
    const RunResult r = run_solve(parse_problem(j.dump()), false);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.summary["smallness"].get<double>(), 1.0 / 12.0, 1e-8);
}
