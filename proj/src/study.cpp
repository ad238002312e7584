#include "wns/study.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace wns {

namespace {

// a(t) = t^2 (1-t)^2 and derivatives
double a0(double t) { return t * t * (1 - t) * (1 - t); }
double a1(double t) { return 2 * t * (1 - t) * (1 - 2 * t); }
double a2(double t) { return 2 * (1 - 6 * t + 6 * t * t); }
double a3(double t) { return 12 * (2 * t - 1); }

double cubic_pressure(const Point& x) { return x.x() * x.x() * x.x() + x.y() * x.y() * x.y() - 0.5; }
Eigen::Vector2d cubic_pressure_grad(const Point& x) { return {3 * x.x() * x.x(), 3 * x.y() * x.y()}; }

constexpr int kErrorDegree = 10;

double analytic_gradient_error(const FEField& uh, const std::function<Grad(const Point&)>& grad_u,
                               const WeightedQuadrature& quad)
{
    CellScalar g = [&](Index c, const std::array<double, 3>& bary, const Point& x) {
        return (eval_in_cell(uh, c, bary).gradient - grad_u(x)).norm();
    };
    return norm_Lpw(uh.space->mesh(), quad, g, 2.0);
}

double analytic_pressure_error(const FEField& uh, const std::function<double(const Point&)>& p, const Weight& w)
{
    CellScalar g = [&](Index c, const std::array<double, 3>& bary, const Point& x) {
        return eval_in_cell(uh, c, bary).pressure - p(x);
    };
    return quotient_pressure_norm(uh.space->mesh(), g, w, kErrorDegree);
}

void fill_rates(ConvergenceReport& r)
{
    std::vector<double> eu, ep;
    for (const auto& l : r.levels) {
        eu.push_back(l.err_u);
        ep.push_back(l.err_p);
    }
    const auto ru = rate_estimate(eu);
    const auto rp = rate_estimate(ep);
    for (std::size_t i = 1; i < r.levels.size(); ++i) {
        r.levels[i].rate_u = ru[i - 1];
        r.levels[i].rate_p = rp[i - 1];
    }
}

const char* mode_name(MeshMode m) { return m == MeshMode::Uniform ? "uniform" : "graded"; }

} // namespace

ManufacturedCase stream_function_case()
{
    ManufacturedCase mc;
    mc.name = "stream_function";
    mc.u = [](const Point& x) {
        return Eigen::Vector2d(a0(x.x()) * a1(x.y()), -a1(x.x()) * a0(x.y()));
    };
    mc.grad_u = [](const Point& x) {
        Grad g;
        g << a1(x.x()) * a1(x.y()), a0(x.x()) * a2(x.y()), -a2(x.x()) * a0(x.y()), -a1(x.x()) * a1(x.y());
        return g;
    };
    mc.laplace_u = [](const Point& x) {
        return Eigen::Vector2d(a2(x.x()) * a1(x.y()) + a0(x.x()) * a3(x.y()),
                               -a3(x.x()) * a0(x.y()) - a1(x.x()) * a2(x.y()));
    };
    mc.p = cubic_pressure;
    mc.grad_p = cubic_pressure_grad;
    return mc;
}

ManufacturedCase zero_case()
{
    ManufacturedCase mc;
    mc.name = "zero";
    mc.u = [](const Point&) { return Eigen::Vector2d::Zero().eval(); };
    mc.grad_u = [](const Point&) { return Grad::Zero().eval(); };
    mc.laplace_u = mc.u;
    mc.p = [](const Point&) { return 0.0; };
    mc.grad_p = mc.u;
    return mc;
}

ManufacturedCase pressure_only_case()
{
    ManufacturedCase mc = zero_case();
    mc.name = "pressure_gradient";
    mc.p = cubic_pressure;
    mc.grad_p = cubic_pressure_grad;
    return mc;
}

AnalyticForce manufactured_forcing(const ManufacturedCase& mc, double nu)
{
    WNS_REQUIRE(std::isfinite(nu) && nu > 0.0, InvalidArgument, "viscosity nu must be > 0");
    AnalyticForce f;
    f.name = mc.name;
    f.f = [mc, nu](const Point& x) -> Eigen::Vector2d {
        return -nu * mc.laplace_u(x) + mc.grad_u(x) * mc.u(x) + mc.grad_p(x);
    };
    return f;
}

std::vector<double> rate_estimate(const std::vector<double>& errors)
{
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        const double a = errors[i], b = errors[i + 1];
        if (a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b))
            out.push_back(std::log2(a / b));
        else
            out.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

TriMesh study_mesh(const ConvergenceConfig& cfg, int level)
{
    WNS_REQUIRE(level >= 0, InvalidArgument, "mesh level must be >= 0");
    TriMesh m = cfg.mesh_mode == MeshMode::Uniform ? generate_uniform(cfg.domain, cfg.base_n)
                                                   : generate_graded(cfg.domain, cfg.grading);
    for (int l = 0; l < level; ++l) m = uniform_refine(m);
    return m;
}

double choose_viscosity(std::shared_ptr<const TaylorHoodSpace> space, const ForcingSpec& f, const Weight& w,
                        const EstimatorOptions& est, double target)
{
    WNS_REQUIRE(target > 0.0, InvalidArgument, "smallness target must be > 0");
    SolveOptions unit;
    unit.nu = 1.0;
    const ConstantsReport r = smallness_indicator(std::move(space), unit, f, w, est);
    if (!(r.smallness > 0.0)) return 1.0;
    return std::sqrt(r.smallness / target);
}

ConvergenceReport run_convergence(const ManufacturedCase& mc, const ConvergenceConfig& cfg)
{
    WNS_REQUIRE(cfg.levels >= 3, InvalidArgument, "convergence study needs at least three levels");
    ConvergenceReport rep;
    rep.weight = cfg.weight.describe();
    rep.forcing = "manufactured(" + mc.name + ")";
    rep.mesh_mode = mode_name(cfg.mesh_mode);
    rep.nu = cfg.nu.value_or(1.0);

    SolveOptions opts = cfg.solve;
    opts.nu = rep.nu;
    const ForcingSpec f = manufactured_forcing(mc, rep.nu);
    const AnalyticPair pair{mc.u, mc.grad_u, mc.p};

    for (int level = 0; level < cfg.levels; ++level) {
        auto mesh = std::make_shared<const TriMesh>(study_mesh(cfg, level));
        auto space = std::make_shared<const TaylorHoodSpace>(build_space(mesh));
        NavierStokesContext ctx(space, opts, cfg.weight, f);
        const PicardResult res = picard(ctx);

        LevelResult lr;
        lr.level = level;
        lr.h_max = mesh->h_max();
        lr.velocity_dofs = space->num_free_velocity_dofs();
        lr.pressure_dofs = space->num_pressure_dofs();
        lr.converged = res.trace.converged;
        lr.picard_iterations = static_cast<int>(res.trace.steps.size());
        lr.divergence_residual = res.trace.divergence_residual;

        const WeightedQuadrature quad(*mesh, cfg.weight, kErrorDegree);
        lr.err_u = analytic_gradient_error(res.solution, mc.grad_u, quad);
        lr.err_p = analytic_pressure_error(res.solution, mc.p, cfg.weight);

        const FEField ih = interpolate(space, mc.u, mc.p);
        lr.interp_err_u = analytic_gradient_error(ih, mc.grad_u, quad);
        lr.interp_err_p = analytic_pressure_error(ih, mc.p, cfg.weight);

        const FEField sh = stokes_projection(ctx.solver(), pair);
        lr.projection_err_u = analytic_gradient_error(sh, mc.grad_u, quad);
        lr.discrete_err_u = ctx.norms().h1_seminorm(sh.velocity - res.solution.velocity);

        if (!lr.converged) rep.complete = false;
        rep.levels.push_back(lr);
    }
    fill_rates(rep);
    return rep;
}

ConvergenceReport run_convergence(const ForcingSpec& f, const ConvergenceConfig& cfg)
{
    WNS_REQUIRE(cfg.levels >= 3, InvalidArgument, "convergence study needs at least three levels");
    WNS_REQUIRE(cfg.reference_offset >= 1, InvalidArgument, "reference offset must be >= 1");
    ConvergenceReport rep;
    rep.weight = cfg.weight.describe();
    rep.forcing = describe(f);
    rep.mesh_mode = mode_name(cfg.mesh_mode);

    const int finest = cfg.levels - 1 + cfg.reference_offset;
    std::vector<std::shared_ptr<const TaylorHoodSpace>> spaces;
    {
        TriMesh m = study_mesh(cfg, 0);
        for (int level = 0; level <= finest; ++level) {
            if (level > 0) m = uniform_refine(m);
            spaces.push_back(std::make_shared<const TaylorHoodSpace>(build_space(std::make_shared<const TriMesh>(m))));
        }
    }

    if (cfg.nu) {
        rep.nu = *cfg.nu;
        SolveOptions unit;
        unit.nu = 1.0;
        const ConstantsReport r = smallness_indicator(spaces[0], unit, f, cfg.weight, cfg.estimators);
        rep.smallness = r.smallness / (rep.nu * rep.nu);
    } else {
        rep.nu = choose_viscosity(spaces[0], f, cfg.weight, cfg.estimators);
        rep.smallness = 1.0 / 12.0;
    }

    SolveOptions opts = cfg.solve;
    opts.nu = rep.nu;
    std::vector<PicardResult> sols;
    sols.reserve(spaces.size());
    for (const auto& sp : spaces) sols.push_back(picard(sp, opts, f, cfg.weight));

    for (int level = 0; level < cfg.levels; ++level) {
        const auto& coarse = sols[static_cast<std::size_t>(level)];
        const auto& ref = sols[static_cast<std::size_t>(level + cfg.reference_offset)];
        const auto& fine_space = ref.solution.space;

        const FEField moved = transfer(coarse.solution, fine_space);
        const Vector du = moved.velocity - ref.solution.velocity;
        const Vector dp = moved.pressure - ref.solution.pressure;
        const SparseMatrix K = weighted_velocity_stiffness(*fine_space, cfg.weight);
        const SparseMatrix M = weighted_pressure_mass(*fine_space, cfg.weight);
        const Vector m = M * Vector::Ones(M.cols());
        const double total = m.sum();
        const double mp = m.dot(dp);

        LevelResult lr;
        lr.level = level;
        lr.h_max = coarse.solution.space->mesh().h_max();
        lr.velocity_dofs = coarse.solution.space->num_free_velocity_dofs();
        lr.pressure_dofs = coarse.solution.space->num_pressure_dofs();
        lr.converged = coarse.trace.converged && ref.trace.converged;
        lr.picard_iterations = static_cast<int>(coarse.trace.steps.size());
        lr.divergence_residual = coarse.trace.divergence_residual;
        lr.err_u = std::sqrt(std::max(0.0, du.dot(K * du)));
        lr.err_p = std::sqrt(std::max(0.0, dp.dot(M * dp) - mp * mp / total));
        if (!lr.converged) rep.complete = false;
        rep.levels.push_back(lr);
    }
    fill_rates(rep);
    return rep;
}

std::string to_csv(const ConvergenceReport& r)
{
    std::ostringstream os;
    os << "level,h,dofs,err_u_H1w,rate_u,err_p_L2w,rate_p\n";
    char buf[512];
    auto num = [](double v) {
        if (std::isnan(v)) return std::string("nan");
        char b[64];
        std::snprintf(b, sizeof b, "%.10e", v);
        return std::string(b);
    };
    for (const auto& l : r.levels) {
        std::snprintf(buf, sizeof buf, "%d,%s,%lld,%s,%s,%s,%s\n", l.level, num(l.h_max).c_str(),
                      static_cast<long long>(l.velocity_dofs + l.pressure_dofs), num(l.err_u).c_str(),
                      num(l.rate_u).c_str(), num(l.err_p).c_str(), num(l.rate_p).c_str());
        os << buf;
    }
    return os.str();
}

} // namespace wns
