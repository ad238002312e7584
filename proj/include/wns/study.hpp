#ifndef WNS_STUDY_HPP
#define WNS_STUDY_HPP

#include "wns/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wns {

/// Exact solution of the stationary problem, given through its derivatives.
struct ManufacturedCase {
    std::string name;
    std::function<Eigen::Vector2d(const Point&)> u;
    std::function<Grad(const Point&)> grad_u;
    std::function<Eigen::Vector2d(const Point&)> laplace_u;
    std::function<double(const Point&)> p;
    std::function<Eigen::Vector2d(const Point&)> grad_p;
};

/// u = curl of psi = x^2 (1-x)^2 y^2 (1-y)^2, p = x^3 + y^3 - 1/2 on the unit square.
ManufacturedCase stream_function_case();
/// u = 0, p = 0.
ManufacturedCase zero_case();
/// u = 0, p = x^3 + y^3 - 1/2 (pure pressure gradient).
ManufacturedCase pressure_only_case();

/// f = -nu lap u + (u . grad) u + grad p, evaluated pointwise.
AnalyticForce manufactured_forcing(const ManufacturedCase& mc, double nu);

/// rates_i = log2(e_i / e_{i+1}); NaN where either error is not positive.
std::vector<double> rate_estimate(const std::vector<double>& errors);

enum class MeshMode { Uniform, Graded };

struct ConvergenceConfig {
    Polygon domain = Polygon::unit_square();
    MeshMode mesh_mode = MeshMode::Uniform;
    int base_n = 8;              ///< coarsest uniform subdivision
    GradingSpec grading{};       ///< coarsest graded mesh when mesh_mode == Graded
    int levels = 4;
    std::optional<double> nu;    ///< absent: chosen so the smallness indicator is below 1/12
    SolveOptions solve{};
    Weight weight = Weight::constant(1.0);
    EstimatorOptions estimators{};
    int reference_offset = 2;    ///< Richardson reference lives this many refinements finer
};

struct LevelResult {
    int level = 0;
    double h_max = 0.0;
    Index velocity_dofs = 0;
    Index pressure_dofs = 0;
    double err_u = 0.0;   ///< ||grad(u - u_h)||_{L2(w)}
    double err_p = 0.0;   ///< quotient ||p - p_h||_{L2(w)}
    double rate_u = std::numeric_limits<double>::quiet_NaN();
    double rate_p = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int picard_iterations = 0;
    double divergence_residual = 0.0;
    // manufactured cases only: best-approximation surrogates and the error splitting
    double interp_err_u = std::numeric_limits<double>::quiet_NaN();
    double interp_err_p = std::numeric_limits<double>::quiet_NaN();
    double projection_err_u = std::numeric_limits<double>::quiet_NaN(); ///< ||grad(u - S_h u)||
    double discrete_err_u = std::numeric_limits<double>::quiet_NaN();   ///< ||grad(S_h u - u_h)||
};

struct ConvergenceReport {
    std::string weight;
    std::string forcing;
    std::string mesh_mode;
    double nu = 1.0;
    double smallness = std::numeric_limits<double>::quiet_NaN(); ///< at the coarsest level
    bool complete = true; ///< false when a level failed to converge
    std::vector<LevelResult> levels;
};

ConvergenceReport run_convergence(const ManufacturedCase& mc, const ConvergenceConfig& cfg);
/// Singular or general forcing: errors against the solution `reference_offset` levels finer,
/// after nodal transfer of the coarse solution onto the reference mesh.
ConvergenceReport run_convergence(const ForcingSpec& f, const ConvergenceConfig& cfg);

/// Fixed columns: level,h,dofs,err_u_H1w,rate_u,err_p_L2w,rate_p
std::string to_csv(const ConvergenceReport& r);

/// Mesh family used by the studies: the coarsest mesh refined `level` times.
TriMesh study_mesh(const ConvergenceConfig& cfg, int level);

/// Smallest nu putting the smallness indicator at `target` on the given space.
double choose_viscosity(std::shared_ptr<const TaylorHoodSpace> space, const ForcingSpec& f, const Weight& w,
                        const EstimatorOptions& est, double target = 1.0 / 12.0);

} // namespace wns

#endif
