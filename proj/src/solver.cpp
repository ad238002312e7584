#include "wns/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace wns {

void SolveOptions::validate() const
{
    WNS_REQUIRE(std::isfinite(nu) && nu > 0.0, InvalidArgument, "nu must be > 0");
    WNS_REQUIRE(linear_tol > 0.0, InvalidArgument, "linear_tol must be > 0");
    WNS_REQUIRE(picard_tol > 0.0, InvalidArgument, "picard_tol must be > 0");
    WNS_REQUIRE(max_iters >= 1, InvalidArgument, "max_iters must be >= 1");
    WNS_REQUIRE(damping > 0.0 && damping <= 1.0, InvalidArgument, "damping must lie in (0, 1]");
}

// ---------------------------------------------------------------------------------------------
// Linear solves

StokesSolver::StokesSolver(SaddleSystem system, double linear_tol) : system_(std::move(system)), linear_tol_(linear_tol)
{
    lu_.analyzePattern(system_.matrix);
    lu_.factorize(system_.matrix);
    WNS_REQUIRE(lu_.info() == Eigen::Success, NumericalFailure,
                "saddle-point factorization failed: " + lu_.lastErrorMessage());
}

Vector StokesSolver::solve_raw(const Vector& rhs) const
{
    const double bnorm = rhs.norm();
    if (bnorm == 0.0) return Vector::Zero(rhs.size());
    Vector x = lu_.solve(rhs);
    double res = (rhs - system_.matrix * x).norm() / bnorm;
    for (int refine = 0; refine < 3 && res > linear_tol_; ++refine) {
        x += lu_.solve(Vector(rhs - system_.matrix * x));
        res = (rhs - system_.matrix * x).norm() / bnorm;
    }
    WNS_REQUIRE(std::isfinite(res) && res <= linear_tol_, NumericalFailure,
                "saddle solve stalled at relative residual " + std::to_string(res));
    return x;
}

FEField StokesSolver::solve(const Vector& rhs_u, const Vector* rhs_p) const
{
    const auto& sp = *system_.space;
    WNS_REQUIRE(rhs_u.size() == sp.num_velocity_dofs(), InvalidArgument, "velocity right-hand side has wrong length");
    const Index nf = sp.num_free_velocity_dofs();
    const Index np = sp.num_pressure_dofs();
    Vector rhs = Vector::Zero(nf + np + 1);
    rhs.head(nf) = sp.restrict_free(rhs_u);
    if (rhs_p) {
        WNS_REQUIRE(rhs_p->size() == np, InvalidArgument, "pressure right-hand side has wrong length");
        rhs.segment(nf, np) = *rhs_p;
    }
    const Vector x = solve_raw(rhs);
    FEField out;
    out.space = system_.space;
    out.velocity = sp.extend_free(x.head(nf));
    out.pressure = x.segment(nf, np);
    return out;
}

FEField solve_saddle(const SaddleSystem& system, const Vector& rhs, double linear_tol)
{
    return StokesSolver(system, linear_tol).solve(rhs);
}

// ---------------------------------------------------------------------------------------------
// Picard

NavierStokesContext::NavierStokesContext(std::shared_ptr<const TaylorHoodSpace> space, const SolveOptions& opts,
                                         const Weight& w, const ForcingSpec& f)
    : space_(std::move(space)), opts_(opts), weight_(w)
{
    opts_.validate();
    solver_ = std::make_unique<StokesSolver>(assemble_stokes(space_, opts_.nu), opts_.linear_tol);
    norms_ = std::make_unique<WeightedNorms>(space_, w);
    dual_ = std::make_unique<WeightedNorms>(space_, w.inverse());
    forcing_ = assemble_forcing(*space_, f);
}

FEField NavierStokesContext::apply_map(const FEField& w) const
{
    return solver_->solve(Vector(forcing_ - assemble_convection(w)));
}

double NavierStokesContext::momentum_residual(const FEField& u) const
{
    const auto& sys = solver_->system();
    const Vector r = sys.A * u.velocity + assemble_convection(u) - sys.B.transpose() * u.pressure - forcing_;
    return dual_->dual_norm(r);
}

double NavierStokesContext::divergence_residual(const FEField& u) const
{
    const Vector r = solver_->system().B * u.velocity;
    return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
}

PicardResult NavierStokesContext::iterate(const FEField* initial, double damping) const
{
    PicardResult out;
    out.trace.damping = damping;
    FEField u = initial ? *initial : FEField::zero(space_);
    space_->apply_mask(u.velocity);
    double prev_inc = std::numeric_limits<double>::quiet_NaN();
    for (int k = 1; k <= opts_.max_iters; ++k) {
        const FEField t = apply_map(u);
        FEField next = t;
        if (damping < 1.0) {
            next.velocity = (1.0 - damping) * u.velocity + damping * t.velocity;
            next.pressure = (1.0 - damping) * u.pressure + damping * t.pressure;
        }
        PicardStep step;
        step.iteration = k;
        step.increment = norms_->h1_seminorm(next.velocity - u.velocity);
        step.solution_norm = norms_->h1_seminorm(next.velocity);
        step.ratio = k > 1 && prev_inc > 0.0 ? step.increment / prev_inc : std::numeric_limits<double>::quiet_NaN();
        out.trace.steps.push_back(step);
        prev_inc = step.increment;
        u = std::move(next);
        if (!std::isfinite(step.increment)) {
            out.trace.message = "iteration diverged (non-finite increment)";
            break;
        }
        if (step.increment <= opts_.picard_tol) {
            out.trace.converged = true;
            break;
        }
    }
    out.trace.momentum_residual = momentum_residual(u);
    out.trace.divergence_residual = divergence_residual(u);
    if (out.trace.converged)
        out.trace.message = "converged";
    else if (out.trace.message.empty())
        out.trace.message = "max_iters reached without meeting picard_tol";
    out.solution = std::move(u);
    return out;
}

PicardResult picard(const NavierStokesContext& ctx, const FEField* initial)
{
    PicardResult r = ctx.iterate(initial, ctx.options().damping);
    if (!r.trace.converged && ctx.options().damping > 0.5) {
        PicardResult retry = ctx.iterate(initial, 0.5);
        retry.trace.attempts = 2;
        return retry;
    }
    return r;
}

PicardResult picard(std::shared_ptr<const TaylorHoodSpace> space, const SolveOptions& opts, const ForcingSpec& f,
                    const Weight& w)
{
    const NavierStokesContext ctx(std::move(space), opts, w, f);
    return picard(ctx);
}

// ---------------------------------------------------------------------------------------------
// Constant estimators

namespace {

/// g_k = int |v|^2 v . phi_k w  (gradient of int |v|^4 w / 4) together with int |v|^4 w.
double quartic_gradient(const TaylorHoodSpace& sp, const WeightedQuadrature& quad, const Vector& v, Vector& g)
{
    const TriMesh& mesh = sp.mesh();
    g.setZero(sp.num_velocity_dofs());
    double total = 0.0;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const auto& nodes = sp.cell_nodes(c);
        for (const auto& q : quad.cell(c)) {
            const auto& l = q.bary;
            std::array<double, 6> phi{};
            for (std::size_t i = 0; i < 3; ++i) phi[i] = l[i] * (2.0 * l[i] - 1.0);
            for (std::size_t e = 0; e < 3; ++e) phi[3 + e] = 4.0 * l[e] * l[(e + 1) % 3];
            Eigen::Vector2d val = Eigen::Vector2d::Zero();
            for (std::size_t k = 0; k < 6; ++k) {
                val.x() += v(sp.velocity_dof(nodes[k], 0)) * phi[k];
                val.y() += v(sp.velocity_dof(nodes[k], 1)) * phi[k];
            }
            const double s = val.squaredNorm();
            total += q.w * s * s;
            for (std::size_t k = 0; k < 6; ++k) {
                g(sp.velocity_dof(nodes[k], 0)) += q.w * s * val.x() * phi[k];
                g(sp.velocity_dof(nodes[k], 1)) += q.w * s * val.y() * phi[k];
            }
        }
    }
    return total;
}

} // namespace

double estimate_C42(std::shared_ptr<const TaylorHoodSpace> space, const Weight& w, int restarts, int iters,
                    std::uint64_t seed)
{
    WNS_REQUIRE(restarts >= 1, InvalidArgument, "C42 estimate needs at least one restart");
    WNS_REQUIRE(iters >= 1, InvalidArgument, "C42 estimate needs at least one iteration");
    const WeightedNorms norms(space, w);
    const TaylorHoodSpace& sp = *space;
    const Index nf = sp.num_free_velocity_dofs();
    if (nf == 0) return 0.0;
    const WeightedQuadrature quad(sp.mesh(), w, 8);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double best = 0.0;
    Vector g;
    for (int r = 0; r < restarts; ++r) {
        Vector vf(nf);
        for (Index i = 0; i < nf; ++i) vf(i) = uni(rng);
        // one smoothing step so the start is not dominated by nodal noise
        vf = norms.solve_free(vf);
        Vector v = sp.extend_free(vf);
        double ratio_prev = 0.0;
        for (int k = 0; k < iters; ++k) {
            const double h1 = norms.h1_seminorm(v);
            if (!(h1 > 0.0)) break;
            v /= h1;
            const double quartic = quartic_gradient(sp, quad, v, g);
            const double ratio = std::pow(std::max(quartic, 0.0), 0.25);
            best = std::max(best, ratio);
            if (k > 0 && std::abs(ratio - ratio_prev) <= 1e-12 * ratio) break;
            ratio_prev = ratio;
            v = norms.riesz(g);
        }
    }
    return best;
}

double forcing_dual_norm(const TaylorHoodSpace& space, const WeightedNorms& dual_norms, const ForcingSpec& f)
{
    return dual_norms.dual_norm(assemble_forcing(space, f));
}

double estimate_Sinv_norm(std::shared_ptr<const TaylorHoodSpace> space, const Weight& w, int iters, std::uint64_t seed)
{
    WNS_REQUIRE(iters >= 1, InvalidArgument, "power iteration needs at least one step");
    const TaylorHoodSpace& sp = *space;
    const StokesSolver solver(assemble_stokes(space, 1.0));
    const WeightedNorms xn(space, w);
    const WeightedNorms yn(space, w.inverse());
    const Index nf = sp.num_free_velocity_dofs();
    const Index np = sp.num_pressure_dofs();

    auto quotient_gram = [](const WeightedNorms& n, const Vector& p) {
        const Vector& m = n.pressure_moment();
        return Vector(n.pressure_mass() * p - m * (m.dot(p) / m.sum()));
    };
    auto gram = [&](const WeightedNorms& n, const Vector& y) {
        Vector out(nf + np + 1);
        out.head(nf) = n.free_stiffness() * y.head(nf);
        out.segment(nf, np) = quotient_gram(n, y.segment(nf, np));
        out(nf + np) = 0.0;
        return out;
    };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Vector y(nf + np + 1);
    for (Index i = 0; i < y.size(); ++i) y(i) = uni(rng);
    y(nf + np) = 0.0;
    double best = 0.0;
    for (int k = 0; k < iters; ++k) {
        const Vector gy = gram(yn, y);
        const double ynorm2 = y.dot(gy);
        if (!(ynorm2 > 0.0)) break;
        Vector x = solver.solve_raw(gy);
        x(nf + np) = 0.0;
        const Vector gx = gram(xn, x);
        const double xnorm2 = x.dot(gx);
        best = std::max(best, xnorm2 / ynorm2);
        y = solver.solve_raw(gx);
        y(nf + np) = 0.0;
        const double scale = std::sqrt(std::max(y.dot(gram(yn, y)), 0.0));
        if (!(scale > 0.0)) break;
        y /= scale;
    }
    return std::sqrt(best);
}

void ConstantsReport::finalize()
{
    smallness = C42 * C42 * Sinv_norm * Sinv_norm * f_dual_norm / (nu * nu);
    ball_radius = C42 > 0.0 && Sinv_norm > 0.0 ? nu / (3.0 * C42 * C42 * Sinv_norm)
                                                : std::numeric_limits<double>::infinity();
    small = smallness < threshold;
}

ConstantsReport smallness_indicator(std::shared_ptr<const TaylorHoodSpace> space, const SolveOptions& opts,
                                    const ForcingSpec& f, const Weight& w, const EstimatorOptions& est)
{
    opts.validate();
    ConstantsReport r;
    r.nu = opts.nu;
    r.C42 = estimate_C42(space, w, est.c42_restarts, est.c42_iters, est.seed);
    r.Sinv_norm = estimate_Sinv_norm(space, w, est.sinv_iters, est.seed);
    const WeightedNorms dual(space, w.inverse());
    r.f_dual_norm = forcing_dual_norm(*space, dual, f);
    r.finalize();
    return r;
}

AprioriCheck apriori_bound_check(const FEField& solution, const ConstantsReport& report, const Weight& w)
{
    AprioriCheck c;
    const WeightedNorms norms(solution.space, w);
    c.lhs = norms.h1_seminorm(solution.velocity);
    c.bound = 1.5 * report.Sinv_norm * report.f_dual_norm / report.nu;
    c.margin = c.bound - c.lhs;
    c.holds = c.lhs <= c.bound;
    if (!report.small)
        c.diagnostic = "smallness condition not met (eta = " + std::to_string(report.smallness) +
                       "); the bound is not guaranteed";
    if (!c.holds)
        c.diagnostic += (c.diagnostic.empty() ? "" : "; ") + std::string("a priori bound violated: ||grad u_h|| = ") +
                        std::to_string(c.lhs) + " > " + std::to_string(c.bound) +
                        " (constants may be under-estimated)";
    return c;
}

// ---------------------------------------------------------------------------------------------
// Stokes projection

FEField stokes_projection(const StokesSolver& solver, const AnalyticPair& target)
{
    const TaylorHoodSpace& sp = solver.space();
    const TriMesh& mesh = sp.mesh();
    const double nu = solver.system().nu;
    const auto& rule = triangle_rule(8);
    Vector rhs_u = Vector::Zero(sp.num_velocity_dofs());
    Vector rhs_p = Vector::Zero(sp.num_pressure_dofs());
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const double area = mesh.signed_area(c);
        const auto& nodes = sp.cell_nodes(c);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& l = rule.points[q];
            const Point x = mesh.map_to_physical(c, l);
            const auto b = p2_basis(mesh, c, l);
            const Grad gu = target.grad_u(x);
            const double p = target.p ? target.p(x) : 0.0;
            const double wq = area * rule.weights[q];
            for (std::size_t k = 0; k < 6; ++k)
                for (int comp = 0; comp < 2; ++comp) {
                    // nu grad u_comp . grad phi - p d_comp phi
                    const double val = nu * gu.row(comp).dot(b.grad[k].transpose()) - p * b.grad[k](comp);
                    rhs_u(sp.velocity_dof(nodes[k], comp)) += wq * val;
                }
            const double div = gu.trace();
            for (std::size_t i = 0; i < 3; ++i) rhs_p(nodes[i]) -= wq * div * l[i];
        }
    }
    return solver.solve(rhs_u, &rhs_p);
}

FEField stokes_projection(std::shared_ptr<const TaylorHoodSpace> space, double nu, const AnalyticPair& target)
{
    const StokesSolver solver(assemble_stokes(std::move(space), nu));
    return stokes_projection(solver, target);
}

} // namespace wns
