#include "wns/wns.h"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kSpec = R"({
  "mesh": {"mode": "uniform", "n": 4},
  "weight": {"kind": "radial", "z": [0.5, 0.5], "alpha": 1.0},
  "forcing": {"kind": "dirac", "z": [0.5, 0.5], "F": [1.0, 0.0]},
  "nu": 1.0,
  "estimators": {"c42_restarts": 1, "c42_iters": 20, "sinv_iters": 10}
})";

struct Summary {
    char* text = nullptr;
    ~Summary() { wns_string_free(text); }
    json parsed() const { return json::parse(text); }
};

fs::path tmp_dir(const std::string& name)
{
    const fs::path p = fs::path(WNS_TEST_TMP) / ("c_api_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST(CApi, VersionAndStatusNames)
{
    EXPECT_GT(std::strlen(wns_version()), 0u);
    EXPECT_STREQ(wns_status_name(WNS_OK), "ok");
    EXPECT_STRNE(wns_status_name(WNS_ERR_INVALID_SPEC), wns_status_name(WNS_ERR_NOT_CONVERGED));
}

TEST(CApi, ParseErrorsSetLastError)
{
    wns_problem* p = nullptr;
    EXPECT_EQ(wns_problem_parse("{\"nu\": 1,", nullptr, &p), WNS_ERR_INVALID_SPEC);
    EXPECT_EQ(p, nullptr);
    EXPECT_NE(std::string(wns_last_error()).find("line"), std::string::npos);
    EXPECT_EQ(wns_problem_parse(R"({"forcing": {"kind": "analytic", "expr": "zero"}, "nu": 1})", nullptr, &p),
              WNS_ERR_INVALID_SPEC);
    EXPECT_NE(std::string(wns_last_error()).find("weight"), std::string::npos);
    EXPECT_EQ(wns_problem_parse(nullptr, nullptr, &p), WNS_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(wns_problem_load("/nonexistent/spec.json", &p), WNS_ERR_IO);
}

TEST(CApi, SolveSummaryAndSeed)
{
    wns_problem* p = nullptr;
    ASSERT_EQ(wns_problem_parse(kSpec, nullptr, &p), WNS_OK) << wns_last_error();
    uint64_t cs = 0;
    ASSERT_EQ(wns_problem_checksum(p, &cs), WNS_OK);
    EXPECT_NE(cs, 0u);
    ASSERT_EQ(wns_problem_set_seed(p, 99), WNS_OK);
    Summary s;
    ASSERT_EQ(wns_run_solve(p, 0, &s.text), WNS_OK) << wns_last_error();
    const json j = s.parsed();
    EXPECT_TRUE(j["converged"].get<bool>());
    EXPECT_EQ(j["provenance"]["seed"], 99);
    EXPECT_EQ(j["artifacts"].size(), 0u);
    wns_problem_free(p);
}

TEST(CApi, NotConvergedStatus)
{
    json spec = json::parse(kSpec);
    spec["forcing"]["F"] = {1e4, 0.0};
    spec["nu"] = 1e-3;
    spec["solve"] = {{"max_iters", 3}};
    wns_problem* p = nullptr;
    ASSERT_EQ(wns_problem_parse(spec.dump().c_str(), nullptr, &p), WNS_OK);
    Summary s;
    EXPECT_EQ(wns_run_solve(p, 0, &s.text), WNS_ERR_NOT_CONVERGED);
    ASSERT_NE(s.text, nullptr);
    EXPECT_FALSE(s.parsed()["converged"].get<bool>());
    wns_problem_free(p);
}

TEST(CApi, ArtifactsAreDeterministic)
{
    const fs::path dir = tmp_dir("determinism");
    {
        std::ofstream(dir / "spec.json") << kSpec;
    }
    std::string first;
    for (int run = 0; run < 2; ++run) {
        wns_problem* p = nullptr;
        ASSERT_EQ(wns_problem_load((dir / "spec.json").c_str(), &p), WNS_OK) << wns_last_error();
        ASSERT_EQ(wns_run_solve(p, 1, nullptr), WNS_OK) << wns_last_error();
        wns_problem_free(p);
        std::ifstream in(dir / "solution.json", std::ios::binary);
        const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        ASSERT_FALSE(text.empty());
        if (run == 0)
            first = text;
        else
            EXPECT_EQ(first, text);
    }
    fs::remove_all(dir);
}

TEST(CApi, WeightsAndConstants)
{
    wns_problem* p = nullptr;
    ASSERT_EQ(wns_problem_parse(kSpec, nullptr, &p), WNS_OK);
    Summary w, c;
    ASSERT_EQ(wns_run_weights(p, 0, &w.text), WNS_OK);
    EXPECT_TRUE(w.parsed()["classification"]["in_A2"].get<bool>());
    ASSERT_EQ(wns_run_constants(p, 0, &c.text), WNS_OK);
    EXPECT_GT(c.parsed()["C42"].get<double>(), 0.0);
    Summary conv;
    EXPECT_EQ(wns_run_convergence(p, 2, 0, &conv.text), WNS_ERR_INVALID_SPEC);
    wns_problem_free(p);
}

TEST(CApi, Meshes)
{
    wns_mesh* m = nullptr;
    ASSERT_EQ(wns_mesh_uniform(nullptr, 0, 4, &m), WNS_OK);
    int64_t np = 0, nc = 0;
    double h = 0.0;
    uint64_t cs = 0;
    ASSERT_EQ(wns_mesh_info(m, &np, &nc, &h, &cs), WNS_OK);
    EXPECT_EQ(np, 25);
    EXPECT_EQ(nc, 32);
    EXPECT_NEAR(h, std::sqrt(2.0) / 4, 1e-15);

    wns_mesh* r = nullptr;
    ASSERT_EQ(wns_mesh_refine(m, &r), WNS_OK);
    ASSERT_EQ(wns_mesh_info(r, &np, &nc, &h, nullptr), WNS_OK);
    EXPECT_EQ(nc, 128);

    int64_t cell = 0;
    ASSERT_EQ(wns_mesh_locate(m, 0.1, 0.2, &cell), WNS_OK);
    EXPECT_GE(cell, 0);
    ASSERT_EQ(wns_mesh_locate(m, 1.5, 0.2, &cell), WNS_OK);
    EXPECT_EQ(cell, -1);

    const fs::path dir = tmp_dir("mesh");
    const std::string path = (dir / "m.txt").string();
    ASSERT_EQ(wns_mesh_write(m, path.c_str()), WNS_OK);
    wns_mesh* back = nullptr;
    ASSERT_EQ(wns_mesh_read(path.c_str(), &back), WNS_OK);
    uint64_t cs2 = 0;
    ASSERT_EQ(wns_mesh_info(back, nullptr, nullptr, nullptr, &cs2), WNS_OK);
    EXPECT_EQ(cs, cs2);

    const double tri[] = {0, 0, 1, 0, 0, 1};
    wns_mesh* g = nullptr;
    EXPECT_EQ(wns_mesh_graded(tri, 3, 0.25, 0.25, 0.5, 4, &g), WNS_OK) << wns_last_error();
    const double cw[] = {0, 0, 0, 1, 1, 0};
    wns_mesh* bad = nullptr;
    EXPECT_EQ(wns_mesh_uniform(cw, 3, 2, &bad), WNS_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(bad, nullptr);
    EXPECT_EQ(wns_mesh_uniform(nullptr, 0, 0, &bad), WNS_ERR_INVALID_ARGUMENT);

    wns_mesh_free(m);
    wns_mesh_free(r);
    wns_mesh_free(back);
    wns_mesh_free(g);
    fs::remove_all(dir);
}
