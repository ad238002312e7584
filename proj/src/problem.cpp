#include "wns/problem.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace wns {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw SpecError(msg); }

std::string join(const std::string& where, const std::string& key)
{
    return where.empty() ? key : where + "." + key;
}

void expect_object(const json& j, const std::string& where)
{
    if (!j.is_object()) fail("field '" + where + "' must be an object");
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) fail("unknown field '" + join(where, it.key()) + "'");
}

const json& require(const json& j, const std::string& key, const std::string& where)
{
    auto it = j.find(key);
    if (it == j.end()) fail("missing required field '" + join(where, key) + "'");
    return *it;
}

double number(const json& j, const std::string& path)
{
    if (!j.is_number()) fail("field '" + path + "' must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail("field '" + path + "' must be finite");
    return v;
}

int integer(const json& j, const std::string& path)
{
    if (!j.is_number_integer()) fail("field '" + path + "' must be an integer");
    return j.get<int>();
}

std::string string(const json& j, const std::string& path)
{
    if (!j.is_string()) fail("field '" + path + "' must be a string");
    return j.get<std::string>();
}

Point point(const json& j, const std::string& path)
{
    if (!j.is_array() || j.size() != 2) fail("field '" + path + "' must be a pair [x, y]");
    return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

Eigen::Vector2d constant_density(const std::string& text, const std::string& path)
{
    static const std::string prefix = "constant:";
    if (text.rfind(prefix, 0) != 0) fail("field '" + path + "' must look like \"constant:[a,b]\"");
    json arr;
    try {
        arr = json::parse(text.substr(prefix.size()));
    } catch (const json::parse_error&) {
        fail("field '" + path + "' has a malformed density vector");
    }
    return point(arr, path);
}

std::string line_anchored(const std::string& text, const json::parse_error& e)
{
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    std::string what = e.what();
    const auto pos = what.find("parse error");
    if (pos != std::string::npos) what = what.substr(pos);
    return "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what;
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_file(const std::filesystem::path& p, const std::string& content)
{
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw Error("cannot create " + p.parent_path().string() + ": " + ec.message());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << content;
    if (!out) throw Error("failed writing " + p.string());
}

std::filesystem::path out_path(const ProblemSpec& spec, const std::string& name)
{
    std::filesystem::path dir = spec.outputs.dir;
    if (dir.is_relative()) dir = spec.base_dir / dir;
    return (dir / name).lexically_normal();
}

json with_provenance(const ProblemSpec& spec, json body)
{
    body["provenance"] = spec.provenance();
    return body;
}

double resolve_nu(const ProblemSpec& spec, const std::shared_ptr<const TaylorHoodSpace>& space)
{
    if (spec.nu) return *spec.nu;
    return choose_viscosity(space, spec.forcing(1.0), spec.weight, spec.estimators);
}

} // namespace

ManufacturedCase manufactured_case(const std::string& name)
{
    if (name == "stream_function") return stream_function_case();
    if (name == "zero") return zero_case();
    if (name == "pressure_gradient") return pressure_only_case();
    fail("unknown manufactured case '" + name + "' (expected stream_function, zero or pressure_gradient)");
}

Weight parse_weight(const json& j, const std::string& where)
{
    expect_object(j, where);
    const std::string kind = string(require(j, "kind", where), join(where, "kind"));
    try {
        if (kind == "constant") {
            reject_unknown(j, where, {"kind", "c"});
            const double c = j.contains("c") ? number(j["c"], join(where, "c")) : 1.0;
            if (!(c > 0.0)) fail("field '" + join(where, "c") + "' must be > 0");
            return Weight::constant(c);
        }
        if (kind == "radial") {
            reject_unknown(j, where, {"kind", "z", "alpha", "c"});
            const Point z = point(require(j, "z", where), join(where, "z"));
            const double alpha = number(require(j, "alpha", where), join(where, "alpha"));
            const double c = j.contains("c") ? number(j["c"], join(where, "c")) : 1.0;
            if (!(alpha > -2.0 && alpha < 2.0))
                fail("field '" + join(where, "alpha") + "' must lie in (-2, 2) for an A2 weight");
            if (!(c > 0.0)) fail("field '" + join(where, "c") + "' must be > 0");
            return Weight::radial(z, alpha, c);
        }
    } catch (const SpecError&) {
        throw;
    } catch (const InvalidArgument& e) {
        fail("field '" + where + "': " + e.what());
    }
    fail("field '" + join(where, "kind") + "' must be \"constant\" or \"radial\"");
}

ForcingSpec parse_forcing(const json& j, double nu, const std::string& where)
{
    expect_object(j, where);
    const std::string kind = string(require(j, "kind", where), join(where, "kind"));
    if (kind == "dirac") {
        reject_unknown(j, where, {"kind", "z", "F"});
        return DiracForce{point(require(j, "z", where), join(where, "z")),
                          point(require(j, "F", where), join(where, "F"))};
    }
    if (kind == "curve") {
        reject_unknown(j, where, {"kind", "polyline", "density"});
        const json& pl = require(j, "polyline", where);
        if (!pl.is_array() || pl.size() < 2) fail("field '" + join(where, "polyline") + "' needs at least two points");
        CurveForce c;
        for (std::size_t i = 0; i < pl.size(); ++i)
            c.polyline.push_back(point(pl[i], join(where, "polyline") + "[" + std::to_string(i) + "]"));
        c.density_label = string(require(j, "density", where), join(where, "density"));
        const Eigen::Vector2d v = constant_density(c.density_label, join(where, "density"));
        c.density = [v](double) { return v; };
        return c;
    }
    if (kind == "analytic") {
        reject_unknown(j, where, {"kind", "expr"});
        const std::string name = string(require(j, "expr", where), join(where, "expr"));
        if (name == "zero") return AnalyticForce{[](const Point&) { return Eigen::Vector2d::Zero().eval(); }, name};
        if (name == "unit_x") return AnalyticForce{[](const Point&) { return Eigen::Vector2d(1.0, 0.0); }, name};
        if (name == "gravity") return AnalyticForce{[](const Point&) { return Eigen::Vector2d(0.0, -1.0); }, name};
        if (name == "stream_function" || name == "pressure_gradient")
            return manufactured_forcing(manufactured_case(name), nu);
        fail("field '" + join(where, "expr") +
             "' must name a built-in (zero, unit_x, gravity, stream_function, pressure_gradient)");
    }
    fail("field '" + join(where, "kind") + "' must be \"dirac\", \"curve\" or \"analytic\"");
}

ForcingSpec ProblemSpec::forcing(double nu_value) const { return parse_forcing(forcing_literal, nu_value); }

TriMesh ProblemSpec::mesh() const
{
    return mesh_mode == MeshMode::Uniform ? generate_uniform(domain, n) : generate_graded(domain, grading);
}

json ProblemSpec::provenance() const
{
    return {{"spec_checksum", hex64(checksum)}, {"seed", estimators.seed}};
}

ProblemSpec parse_problem(const std::string& text, const std::filesystem::path& base_dir)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(line_anchored(text, e));
    }
    expect_object(root, "<root>");
    reject_unknown(root, "", {"domain", "mesh", "weight", "forcing", "nu", "solve", "estimators", "outputs",
                              "convergence"});

    ProblemSpec s;
    s.checksum = fnv1a(text);
    s.base_dir = base_dir;

    if (root.contains("domain")) {
        const json& d = root["domain"];
        if (d.is_string()) {
            if (d.get<std::string>() != "unit_square") fail("field 'domain' must be \"unit_square\" or a polygon");
        } else {
            expect_object(d, "domain");
            reject_unknown(d, "domain", {"polygon"});
            const json& pv = require(d, "polygon", "domain");
            if (!pv.is_array()) fail("field 'domain.polygon' must be an array of points");
            std::vector<Point> verts;
            for (std::size_t i = 0; i < pv.size(); ++i)
                verts.push_back(point(pv[i], "domain.polygon[" + std::to_string(i) + "]"));
            try {
                s.domain = Polygon(std::move(verts));
            } catch (const InvalidArgument& e) {
                fail(std::string("field 'domain.polygon': ") + e.what());
            }
            s.domain_label = "polygon";
        }
    }

    if (root.contains("mesh")) {
        const json& m = root["mesh"];
        expect_object(m, "mesh");
        reject_unknown(m, "mesh", {"mode", "n", "center", "mu", "base_n"});
        const std::string mode = m.contains("mode") ? string(m["mode"], "mesh.mode") : "uniform";
        if (mode == "uniform") {
            s.mesh_mode = MeshMode::Uniform;
            s.n = integer(require(m, "n", "mesh"), "mesh.n");
            if (s.n < 1) fail("field 'mesh.n' must be >= 1");
        } else if (mode == "graded") {
            s.mesh_mode = MeshMode::Graded;
            s.grading.center = point(require(m, "center", "mesh"), "mesh.center");
            s.grading.mu = number(require(m, "mu", "mesh"), "mesh.mu");
            s.grading.base_n = integer(require(m, "base_n", "mesh"), "mesh.base_n");
            if (!(s.grading.mu > 0.0 && s.grading.mu <= 1.0)) fail("field 'mesh.mu' must lie in (0, 1]");
            if (s.grading.base_n < 1) fail("field 'mesh.base_n' must be >= 1");
            s.n = s.grading.base_n;
        } else {
            fail("field 'mesh.mode' must be \"uniform\" or \"graded\"");
        }
    }

    s.weight = parse_weight(require(root, "weight", ""), "weight");

    const json& nu = require(root, "nu", "");
    if (nu.is_string()) {
        if (nu.get<std::string>() != "auto") fail("field 'nu' must be a positive number or \"auto\"");
    } else {
        s.nu = number(nu, "nu");
        if (!(*s.nu > 0.0)) fail("field 'nu' must be > 0");
    }

    s.forcing_literal = require(root, "forcing", "");
    parse_forcing(s.forcing_literal, s.nu.value_or(1.0)); // validate now
    if (!s.nu && s.forcing_literal.value("expr", std::string()) == "stream_function")
        fail("field 'nu' must be a number when the forcing depends on it");

    if (root.contains("solve")) {
        const json& o = root["solve"];
        expect_object(o, "solve");
        reject_unknown(o, "solve", {"linear_tol", "picard_tol", "max_iters", "damping"});
        if (o.contains("linear_tol")) s.solve.linear_tol = number(o["linear_tol"], "solve.linear_tol");
        if (o.contains("picard_tol")) s.solve.picard_tol = number(o["picard_tol"], "solve.picard_tol");
        if (o.contains("max_iters")) s.solve.max_iters = integer(o["max_iters"], "solve.max_iters");
        if (o.contains("damping")) s.solve.damping = number(o["damping"], "solve.damping");
    }
    s.solve.nu = s.nu.value_or(1.0);
    try {
        s.solve.validate();
    } catch (const InvalidArgument& e) {
        fail(std::string("field 'solve': ") + e.what());
    }

    if (root.contains("estimators")) {
        const json& o = root["estimators"];
        expect_object(o, "estimators");
        reject_unknown(o, "estimators", {"c42_restarts", "c42_iters", "sinv_iters", "seed"});
        if (o.contains("c42_restarts")) s.estimators.c42_restarts = integer(o["c42_restarts"], "estimators.c42_restarts");
        if (o.contains("c42_iters")) s.estimators.c42_iters = integer(o["c42_iters"], "estimators.c42_iters");
        if (o.contains("sinv_iters")) s.estimators.sinv_iters = integer(o["sinv_iters"], "estimators.sinv_iters");
        if (o.contains("seed")) {
            if (!o["seed"].is_number_unsigned()) fail("field 'estimators.seed' must be a non-negative integer");
            s.estimators.seed = o["seed"].get<std::uint64_t>();
        }
        if (s.estimators.c42_restarts < 1 || s.estimators.c42_iters < 1 || s.estimators.sinv_iters < 1)
            fail("field 'estimators': iteration counts must be >= 1");
    }

    if (root.contains("outputs")) {
        const json& o = root["outputs"];
        expect_object(o, "outputs");
        reject_unknown(o, "outputs", {"dir", "solution", "trace", "constants", "weights", "convergence_csv",
                                      "convergence_json"});
        if (o.contains("dir")) s.outputs.dir = string(o["dir"], "outputs.dir");
        auto opt = [&](const char* key, std::string& dst) {
            if (o.contains(key)) dst = string(o[key], std::string("outputs.") + key);
        };
        opt("solution", s.outputs.solution);
        opt("trace", s.outputs.trace);
        opt("constants", s.outputs.constants);
        opt("weights", s.outputs.weights);
        opt("convergence_csv", s.outputs.convergence_csv);
        opt("convergence_json", s.outputs.convergence_json);
    }

    if (root.contains("convergence")) {
        const json& o = root["convergence"];
        expect_object(o, "convergence");
        reject_unknown(o, "convergence", {"case", "levels", "reference_offset"});
        if (o.contains("case")) {
            s.manufactured_case = string(o["case"], "convergence.case");
            manufactured_case(s.manufactured_case);
        }
        if (o.contains("levels")) s.levels = integer(o["levels"], "convergence.levels");
        if (o.contains("reference_offset"))
            s.reference_offset = integer(o["reference_offset"], "convergence.reference_offset");
        if (s.levels < 3) fail("field 'convergence.levels' must be >= 3");
        if (s.reference_offset < 1) fail("field 'convergence.reference_offset' must be >= 1");
    }
    return s;
}

ProblemSpec load_problem(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read spec file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    auto dir = path.parent_path();
    if (dir.empty()) dir = ".";
    return parse_problem(ss.str(), dir);
}

json to_json(const FEField& f)
{
    const auto& sp = *f.space;
    return {{"mesh_checksum", hex64(sp.checksum())},
            {"num_points", sp.mesh().num_points()},
            {"num_cells", sp.mesh().num_cells()},
            {"velocity_dofs", sp.num_velocity_dofs()},
            {"pressure_dofs", sp.num_pressure_dofs()},
            {"velocity", std::vector<double>(f.velocity.data(), f.velocity.data() + f.velocity.size())},
            {"pressure", std::vector<double>(f.pressure.data(), f.pressure.data() + f.pressure.size())}};
}

json to_json(const PicardTrace& t)
{
    json steps = json::array();
    for (const auto& s : t.steps)
        steps.push_back({{"iteration", s.iteration},
                         {"increment", num_or_null(s.increment)},
                         {"solution_norm", num_or_null(s.solution_norm)},
                         {"ratio", num_or_null(s.ratio)}});
    return {{"converged", t.converged},
            {"damping", t.damping},
            {"attempts", t.attempts},
            {"momentum_residual", num_or_null(t.momentum_residual)},
            {"divergence_residual", num_or_null(t.divergence_residual)},
            {"message", t.message},
            {"steps", steps}};
}

json to_json(const ConstantsReport& r)
{
    return {{"C42", num_or_null(r.C42)},
            {"Sinv_norm", num_or_null(r.Sinv_norm)},
            {"f_dual_norm", num_or_null(r.f_dual_norm)},
            {"nu", r.nu},
            {"smallness", num_or_null(r.smallness)},
            {"threshold", ConstantsReport::threshold},
            {"ball_radius", num_or_null(r.ball_radius)},
            {"small", r.small}};
}

json to_json(const WeightClassReport& r)
{
    return {{"in_A2", r.in_A2},
            {"in_A1", r.in_A1},
            {"inverse_in_A1", r.inverse_in_A1},
            {"in_A2_of_domain", r.in_A2_of_domain},
            {"epsilon_buffer", num_or_null(r.epsilon_buffer)},
            {"lower_bound_on_collar", num_or_null(r.lower_bound_on_collar)},
            {"diagnostic", r.diagnostic}};
}

json to_json(const ConvergenceReport& r)
{
    json levels = json::array();
    for (const auto& l : r.levels)
        levels.push_back({{"level", l.level},
                          {"h_max", l.h_max},
                          {"velocity_dofs", l.velocity_dofs},
                          {"pressure_dofs", l.pressure_dofs},
                          {"err_u_H1w", num_or_null(l.err_u)},
                          {"err_p_L2w", num_or_null(l.err_p)},
                          {"rate_u", num_or_null(l.rate_u)},
                          {"rate_p", num_or_null(l.rate_p)},
                          {"converged", l.converged},
                          {"picard_iterations", l.picard_iterations},
                          {"divergence_residual", num_or_null(l.divergence_residual)},
                          {"interp_err_u", num_or_null(l.interp_err_u)},
                          {"interp_err_p", num_or_null(l.interp_err_p)},
                          {"projection_err_u", num_or_null(l.projection_err_u)},
                          {"discrete_err_u", num_or_null(l.discrete_err_u)}});
    return {{"weight", r.weight},   {"forcing", r.forcing},           {"mesh_mode", r.mesh_mode},
            {"nu", r.nu},           {"smallness", num_or_null(r.smallness)}, {"complete", r.complete},
            {"levels", levels}};
}

RunResult run_solve(const ProblemSpec& spec, bool write_artifacts)
{
    auto mesh = std::make_shared<const TriMesh>(spec.mesh());
    auto space = std::make_shared<const TaylorHoodSpace>(build_space(mesh));
    SolveOptions opts = spec.solve;
    opts.nu = resolve_nu(spec, space);
    const ForcingSpec f = spec.forcing(opts.nu);

    const PicardResult res = picard(space, opts, f, spec.weight);
    const ConstantsReport constants = smallness_indicator(space, opts, f, spec.weight, spec.estimators);
    const AprioriCheck ap = apriori_bound_check(res.solution, constants, spec.weight);

    RunResult out;
    out.converged = res.trace.converged;
    json artifacts = json::array();
    if (write_artifacts) {
        json sol = to_json(res.solution);
        sol["nu"] = opts.nu;
        sol["weight"] = spec.weight.describe();
        sol["forcing"] = describe(f);
        const auto p1 = out_path(spec, spec.outputs.solution);
        const auto p2 = out_path(spec, spec.outputs.trace);
        const auto p3 = out_path(spec, spec.outputs.constants);
        write_file(p1, with_provenance(spec, sol).dump(1) + "\n");
        write_file(p2, with_provenance(spec, to_json(res.trace)).dump(1) + "\n");
        json cj = to_json(constants);
        cj["apriori"] = {{"holds", ap.holds}, {"lhs", ap.lhs}, {"bound", num_or_null(ap.bound)},
                         {"margin", num_or_null(ap.margin)}};
        write_file(p3, with_provenance(spec, cj).dump(1) + "\n");
        artifacts = {p1.string(), p2.string(), p3.string()};
    }
    out.summary = with_provenance(spec, {{"command", "solve"},
                                         {"converged", res.trace.converged},
                                         {"iterations", res.trace.steps.size()},
                                         {"message", res.trace.message},
                                         {"nu", opts.nu},
                                         {"smallness", num_or_null(constants.smallness)},
                                         {"solution_norm_H1w", ap.lhs},
                                         {"divergence_residual", num_or_null(res.trace.divergence_residual)},
                                         {"artifacts", artifacts}});
    return out;
}

RunResult run_convergence(const ProblemSpec& spec, int levels, bool write_artifacts)
{
    ConvergenceConfig cfg;
    cfg.domain = spec.domain;
    cfg.mesh_mode = spec.mesh_mode;
    cfg.base_n = spec.n;
    cfg.grading = spec.grading;
    cfg.levels = levels > 0 ? levels : spec.levels;
    cfg.nu = spec.nu;
    cfg.solve = spec.solve;
    cfg.weight = spec.weight;
    cfg.estimators = spec.estimators;
    cfg.reference_offset = spec.reference_offset;
    if (cfg.levels < 3) fail("convergence needs at least 3 levels");

    const ConvergenceReport rep = spec.manufactured_case.empty()
                                      ? run_convergence(spec.forcing(spec.nu.value_or(1.0)), cfg)
                                      : run_convergence(manufactured_case(spec.manufactured_case), cfg);
    RunResult out;
    out.converged = rep.complete;
    json artifacts = json::array();
    if (write_artifacts) {
        const auto pc = out_path(spec, spec.outputs.convergence_csv);
        const auto pj = out_path(spec, spec.outputs.convergence_json);
        write_file(pc, "# spec_checksum=" + hex64(spec.checksum) + " seed=" + std::to_string(spec.estimators.seed) +
                           "\n" + to_csv(rep));
        write_file(pj, with_provenance(spec, to_json(rep)).dump(1) + "\n");
        artifacts = {pc.string(), pj.string()};
    }
    json errs = json::array();
    for (const auto& l : rep.levels) errs.push_back(num_or_null(l.err_u));
    out.summary = with_provenance(spec, {{"command", "convergence"},
                                         {"complete", rep.complete},
                                         {"levels", rep.levels.size()},
                                         {"nu", rep.nu},
                                         {"err_u_H1w", errs},
                                         {"final_rate_u", num_or_null(rep.levels.back().rate_u)},
                                         {"final_rate_p", num_or_null(rep.levels.back().rate_p)},
                                         {"artifacts", artifacts}});
    return out;
}

RunResult run_weights(const ProblemSpec& spec, bool write_artifacts)
{
    const WeightClassReport cls = classify(spec.weight, spec.domain);
    json scan = json::array();
    for (int depth = 3; depth <= 7; ++depth)
        scan.push_back({{"depth", depth}, {"estimate", num_or_null(a2_constant_estimate(spec.weight, spec.domain, depth))}});
    json body = {{"weight", spec.weight.describe()}, {"classification", to_json(cls)}, {"a2_scan", scan}};
    RunResult out;
    json artifacts = json::array();
    if (write_artifacts) {
        const auto p = out_path(spec, spec.outputs.weights);
        write_file(p, with_provenance(spec, body).dump(1) + "\n");
        artifacts.push_back(p.string());
    }
    body["command"] = "weights";
    body["artifacts"] = artifacts;
    out.summary = with_provenance(spec, body);
    return out;
}

RunResult run_constants(const ProblemSpec& spec, bool write_artifacts)
{
    auto mesh = std::make_shared<const TriMesh>(spec.mesh());
    auto space = std::make_shared<const TaylorHoodSpace>(build_space(mesh));
    SolveOptions opts = spec.solve;
    opts.nu = resolve_nu(spec, space);
    const ConstantsReport r = smallness_indicator(space, opts, spec.forcing(opts.nu), spec.weight, spec.estimators);
    json body = to_json(r);
    RunResult out;
    json artifacts = json::array();
    if (write_artifacts) {
        const auto p = out_path(spec, spec.outputs.constants);
        write_file(p, with_provenance(spec, body).dump(1) + "\n");
        artifacts.push_back(p.string());
    }
    body["command"] = "constants";
    body["artifacts"] = artifacts;
    out.summary = with_provenance(spec, body);
    return out;
}

} // namespace wns
