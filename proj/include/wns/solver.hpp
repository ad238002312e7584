#ifndef WNS_SOLVER_HPP
#define WNS_SOLVER_HPP

#include "wns/assembly.hpp"
#include "wns/femspace.hpp"

#include <Eigen/SparseLU>

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wns {

struct SolveOptions {
    double nu = 1.0;
    double linear_tol = 1e-10;  ///< relative algebraic residual of each saddle solve
    double picard_tol = 1e-8;   ///< stop when ||grad(u^{k+1} - u^k)||_{L2(w)} <= picard_tol
    int max_iters = 100;
    double damping = 1.0;       ///< u^{k+1} <- (1 - d) u^k + d T(u^k), d in (0, 1]

    void validate() const;
};

/// Factorized saddle system. Solves are exact up to the direct solver's rounding; the relative
/// residual is checked against linear_tol and improved by iterative refinement if needed.
class StokesSolver {
public:
    StokesSolver(SaddleSystem system, double linear_tol = 1e-10);

    const SaddleSystem& system() const { return system_; }
    const TaylorHoodSpace& space() const { return *system_.space; }
    double linear_tol() const { return linear_tol_; }

    /// Discrete Stokes solve: A u - B' p = rhs_u (free rows), -B u = rhs_p, int p = 0.
    /// rhs_u has full velocity length (constrained entries ignored); rhs_p defaults to zero.
    FEField solve(const Vector& rhs_u, const Vector* rhs_p = nullptr) const;

    /// Raw solve on the assembled (free + pressure + multiplier) layout.
    Vector solve_raw(const Vector& rhs) const;

private:
    SaddleSystem system_;
    double linear_tol_;
    Eigen::SparseLU<SparseMatrix> lu_;
};

/// One-shot convenience wrapper around StokesSolver.
FEField solve_saddle(const SaddleSystem& system, const Vector& rhs, double linear_tol = 1e-10);

struct PicardStep {
    int iteration = 0;
    double increment = 0.0;      ///< ||grad(u^{k+1} - u^k)||_{L2(w)}
    double solution_norm = 0.0;  ///< ||grad u^{k+1}||_{L2(w)}
    double ratio = std::numeric_limits<double>::quiet_NaN(); ///< increment_k / increment_{k-1}
};

struct PicardTrace {
    std::vector<PicardStep> steps;
    bool converged = false;
    double damping = 1.0;
    int attempts = 1;
    double momentum_residual = 0.0;  ///< dual norm (w^-1) of the nonlinear momentum residual
    double divergence_residual = 0.0; ///< max_q |int div u_h q| over pressure basis functions
    std::string message;
};

struct PicardResult {
    FEField solution;
    PicardTrace trace;
};

/// Everything needed to iterate the discrete fixed-point map on one space: the factorized
/// nu-scaled Stokes operator, weighted norms for w and w^-1, and the forcing functional.
class NavierStokesContext {
public:
    NavierStokesContext(std::shared_ptr<const TaylorHoodSpace> space, const SolveOptions& opts, const Weight& w,
                        const ForcingSpec& f);

    const std::shared_ptr<const TaylorHoodSpace>& space() const { return space_; }
    const SolveOptions& options() const { return opts_; }
    const Weight& weight() const { return weight_; }
    const StokesSolver& solver() const { return *solver_; }
    const WeightedNorms& norms() const { return *norms_; }
    const WeightedNorms& dual_norms() const { return *dual_; }
    const Vector& forcing() const { return forcing_; }

    /// T1(w): velocity/pressure of S_h^{-1}[F - N(w)] with the nu-scaled operator.
    FEField apply_map(const FEField& w) const;

    /// Picard iteration from `initial` (zero when absent) with the given damping.
    PicardResult iterate(const FEField* initial, double damping) const;

    /// Dual norm of A u + N(u) - B'p - F and the divergence residual of a candidate solution.
    double momentum_residual(const FEField& u) const;
    double divergence_residual(const FEField& u) const;

private:
    std::shared_ptr<const TaylorHoodSpace> space_;
    SolveOptions opts_;
    Weight weight_;
    std::unique_ptr<StokesSolver> solver_;
    std::unique_ptr<WeightedNorms> norms_;
    std::unique_ptr<WeightedNorms> dual_;
    Vector forcing_;
};

/// Picard driver: iterates from zero; if it fails with damping 1 it retries once with damping
/// 0.5. Never throws on non-convergence; the trace says what happened.
PicardResult picard(std::shared_ptr<const TaylorHoodSpace> space, const SolveOptions& opts, const ForcingSpec& f,
                    const Weight& w = Weight::constant(1.0));
PicardResult picard(const NavierStokesContext& ctx, const FEField* initial = nullptr);

struct ConstantsReport {
    double C42 = 0.0;
    double Sinv_norm = 0.0;
    double f_dual_norm = 0.0;
    double nu = 1.0;
    double smallness = 0.0;   ///< C42^2 Sinv^2 ||f|| / nu^2
    double ball_radius = 0.0; ///< nu / (3 C42^2 Sinv)
    bool small = false;       ///< smallness < 1/6

    static constexpr double threshold = 1.0 / 6.0;

    /// Recompute smallness, ball radius and the flag from the three constants and nu.
    void finalize();
};

struct EstimatorOptions {
    int c42_restarts = 3;
    int c42_iters = 200;
    int sinv_iters = 40;
    std::uint64_t seed = 20240611;
};

/// Lower bound for sup ||v||_{L4(w)} / ||grad v||_{L2(w)} over masked discrete velocities:
/// best of `restarts` nonlinear power iterations  v <- K_w^{-1} grad(int |v|^4 w), each of
/// which increases the ratio monotonically.
double estimate_C42(std::shared_ptr<const TaylorHoodSpace> space, const Weight& w, int restarts, int iters = 200,
                    std::uint64_t seed = 20240611);

/// Power iteration for the norm of S_h^{-1} (nu = 1) from Y_h' to X_h, where
/// X_h carries ||grad u||_{L2(w)} and the quotient L2(w) pressure norm and Y_h the same with
/// w^-1. Each iterate gives a lower bound; the largest is returned.
double estimate_Sinv_norm(std::shared_ptr<const TaylorHoodSpace> space, const Weight& w, int iters,
                          std::uint64_t seed = 20240611);

/// Discrete dual norm of the forcing: sup_v <f, v> / ||grad v||_{L2(w^-1)}.
double forcing_dual_norm(const TaylorHoodSpace& space, const WeightedNorms& dual_norms, const ForcingSpec& f);

ConstantsReport smallness_indicator(std::shared_ptr<const TaylorHoodSpace> space, const SolveOptions& opts,
                                    const ForcingSpec& f, const Weight& w, const EstimatorOptions& est = {});

struct AprioriCheck {
    bool holds = false;
    double lhs = 0.0;   ///< ||grad u_h||_{L2(w)}
    double bound = 0.0; ///< 1.5 Sinv ||f|| / nu
    double margin = 0.0;
    std::string diagnostic;
};

AprioriCheck apriori_bound_check(const FEField& solution, const ConstantsReport& report, const Weight& w);

/// Analytic pair with gradients, used as Stokes projection target.
struct AnalyticPair {
    std::function<Eigen::Vector2d(const Point&)> u;
    std::function<Grad(const Point&)> grad_u;
    std::function<double(const Point&)> p;
};

/// Discrete pair (S_h u, S_h p) with
///   nu (grad S_h u, grad v) - (S_h p, div v) = nu (grad u, grad v) - (p, div v),
///   (div S_h u, q) = (div u, q)
/// for all discrete v, q.
FEField stokes_projection(const StokesSolver& solver, const AnalyticPair& target);
FEField stokes_projection(std::shared_ptr<const TaylorHoodSpace> space, double nu, const AnalyticPair& target);

} // namespace wns

#endif
