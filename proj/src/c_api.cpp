#include "wns/wns.h"

#include "wns/problem.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

struct wns_problem {
    wns::ProblemSpec spec;
};

struct wns_mesh {
    wns::TriMesh mesh;
};

namespace {

thread_local std::string last_error;

wns_status set_error(wns_status s, const std::string& msg)
{
    last_error = msg;
    return s;
}

template <class F>
wns_status guarded(F&& body)
{
    try {
        last_error.clear();
        return body();
    } catch (const wns::SpecError& e) {
        return set_error(WNS_ERR_INVALID_SPEC, e.what());
    } catch (const wns::OutsideDomain& e) {
        return set_error(WNS_ERR_OUTSIDE_DOMAIN, e.what());
    } catch (const wns::InvalidArgument& e) {
        return set_error(WNS_ERR_INVALID_ARGUMENT, e.what());
    } catch (const wns::SingularPoint& e) {
        return set_error(WNS_ERR_INVALID_ARGUMENT, e.what());
    } catch (const wns::NumericalFailure& e) {
        return set_error(WNS_ERR_NUMERICAL, e.what());
    } catch (const wns::Error& e) {
        return set_error(WNS_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return set_error(WNS_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(WNS_ERR_INTERNAL, "unknown error");
    }
}

char* dup_string(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

wns::Polygon polygon_from(const double* xy, size_t n)
{
    if (!xy) return wns::Polygon::unit_square();
    std::vector<wns::Point> v;
    for (size_t i = 0; i < n; ++i) v.emplace_back(xy[2 * i], xy[2 * i + 1]);
    return wns::Polygon(std::move(v));
}

wns_status finish_run(const wns::RunResult& r, char** summary)
{
    if (summary) *summary = dup_string(r.summary.dump(1));
    if (!r.converged) return set_error(WNS_ERR_NOT_CONVERGED, "Picard iteration did not converge");
    return WNS_OK;
}

#define WNS_CHECK_ARG(cond, msg)                                                                   \
    do {                                                                                           \
        if (!(cond)) return set_error(WNS_ERR_INVALID_ARGUMENT, msg);                               \
    } while (0)

} // namespace

extern "C" {

const char* wns_last_error(void) { return last_error.c_str(); }

const char* wns_version(void) { return "1.0.0"; }

const char* wns_status_name(wns_status status)
{
    switch (status) {
    case WNS_OK: return "ok";
    case WNS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case WNS_ERR_INVALID_SPEC: return "invalid spec";
    case WNS_ERR_NOT_CONVERGED: return "not converged";
    case WNS_ERR_NUMERICAL: return "numerical failure";
    case WNS_ERR_OUTSIDE_DOMAIN: return "outside domain";
    case WNS_ERR_IO: return "i/o error";
    case WNS_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void wns_string_free(char* s) { std::free(s); }

wns_status wns_problem_load(const char* path, wns_problem** out)
{
    WNS_CHECK_ARG(path && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new wns_problem{wns::load_problem(path)};
        return WNS_OK;
    });
}

wns_status wns_problem_parse(const char* json_text, const char* base_dir, wns_problem** out)
{
    WNS_CHECK_ARG(json_text && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new wns_problem{wns::parse_problem(json_text, base_dir ? base_dir : ".")};
        return WNS_OK;
    });
}

void wns_problem_free(wns_problem* problem) { delete problem; }

wns_status wns_problem_set_seed(wns_problem* problem, uint64_t seed)
{
    WNS_CHECK_ARG(problem, "null problem");
    problem->spec.estimators.seed = seed;
    last_error.clear();
    return WNS_OK;
}

wns_status wns_problem_checksum(const wns_problem* problem, uint64_t* out)
{
    WNS_CHECK_ARG(problem && out, "null argument");
    *out = problem->spec.checksum;
    last_error.clear();
    return WNS_OK;
}

wns_status wns_run_solve(const wns_problem* problem, int write_artifacts, char** summary_json)
{
    WNS_CHECK_ARG(problem, "null problem");
    if (summary_json) *summary_json = nullptr;
    return guarded([&] { return finish_run(wns::run_solve(problem->spec, write_artifacts != 0), summary_json); });
}

wns_status wns_run_convergence(const wns_problem* problem, int levels, int write_artifacts, char** summary_json)
{
    WNS_CHECK_ARG(problem, "null problem");
    if (summary_json) *summary_json = nullptr;
    return guarded([&] {
        return finish_run(wns::run_convergence(problem->spec, levels, write_artifacts != 0), summary_json);
    });
}

wns_status wns_run_weights(const wns_problem* problem, int write_artifacts, char** summary_json)
{
    WNS_CHECK_ARG(problem, "null problem");
    if (summary_json) *summary_json = nullptr;
    return guarded([&] { return finish_run(wns::run_weights(problem->spec, write_artifacts != 0), summary_json); });
}

wns_status wns_run_constants(const wns_problem* problem, int write_artifacts, char** summary_json)
{
    WNS_CHECK_ARG(problem, "null problem");
    if (summary_json) *summary_json = nullptr;
    return guarded(
        [&] { return finish_run(wns::run_constants(problem->spec, write_artifacts != 0), summary_json); });
}

wns_status wns_mesh_uniform(const double* polygon_xy, size_t nvert, int n, wns_mesh** out)
{
    WNS_CHECK_ARG(out, "null output");
    *out = nullptr;
    return guarded([&] {
        *out = new wns_mesh{wns::generate_uniform(polygon_from(polygon_xy, nvert), n)};
        return WNS_OK;
    });
}

wns_status wns_mesh_graded(const double* polygon_xy, size_t nvert, double cx, double cy, double mu, int base_n,
                           wns_mesh** out)
{
    WNS_CHECK_ARG(out, "null output");
    *out = nullptr;
    return guarded([&] {
        wns::GradingSpec g;
        g.center = wns::Point(cx, cy);
        g.mu = mu;
        g.base_n = base_n;
        *out = new wns_mesh{wns::generate_graded(polygon_from(polygon_xy, nvert), g)};
        return WNS_OK;
    });
}

wns_status wns_mesh_refine(const wns_mesh* mesh, wns_mesh** out)
{
    WNS_CHECK_ARG(mesh && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new wns_mesh{wns::uniform_refine(mesh->mesh)};
        return WNS_OK;
    });
}

wns_status wns_mesh_read(const char* path, wns_mesh** out)
{
    WNS_CHECK_ARG(path && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        std::ifstream in(path, std::ios::binary);
        if (!in) return set_error(WNS_ERR_IO, std::string("cannot read ") + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        *out = new wns_mesh{wns::read_text(ss.str())};
        return WNS_OK;
    });
}

wns_status wns_mesh_write(const wns_mesh* mesh, const char* path)
{
    WNS_CHECK_ARG(mesh && path, "null argument");
    return guarded([&] {
        std::ofstream o(path, std::ios::binary);
        if (!o) return set_error(WNS_ERR_IO, std::string("cannot write ") + path);
        o << wns::write_text(mesh->mesh);
        if (!o) return set_error(WNS_ERR_IO, std::string("failed writing ") + path);
        return WNS_OK;
    });
}

wns_status wns_mesh_info(const wns_mesh* mesh, int64_t* num_points, int64_t* num_cells, double* h_max,
                         uint64_t* checksum)
{
    WNS_CHECK_ARG(mesh, "null mesh");
    return guarded([&] {
        if (num_points) *num_points = mesh->mesh.num_points();
        if (num_cells) *num_cells = mesh->mesh.num_cells();
        if (h_max) *h_max = mesh->mesh.h_max();
        if (checksum) *checksum = mesh->mesh.checksum();
        return WNS_OK;
    });
}

wns_status wns_mesh_locate(const wns_mesh* mesh, double x, double y, int64_t* cell)
{
    WNS_CHECK_ARG(mesh && cell, "null argument");
    return guarded([&] {
        const auto loc = mesh->mesh.locate(wns::Point(x, y));
        *cell = loc ? loc->cell : -1;
        return WNS_OK;
    });
}

void wns_mesh_free(wns_mesh* mesh) { delete mesh; }

} // extern "C"
