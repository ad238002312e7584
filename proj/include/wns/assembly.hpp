#ifndef WNS_ASSEMBLY_HPP
#define WNS_ASSEMBLY_HPP

#include "wns/femspace.hpp"

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace wns {

/// Discrete Stokes operator on a Taylor-Hood space.
///
/// For all discrete v, q:  v.(A u) = nu int grad u : grad v  and  q.(B u) = int q div u.
/// A and B act on the full (unmasked) velocity vector. `matrix` is the symmetric saddle matrix
/// on the free velocity dofs, the pressure dofs and one Lagrange multiplier enforcing
/// int p_h = 0:
///
///     [ A_ff  -B_f'  0 ]
///     [ -B_f   0     m ]
///     [ 0      m'    0 ]
struct SaddleSystem {
    std::shared_ptr<const TaylorHoodSpace> space;
    double nu = 1.0;
    SparseMatrix A;
    SparseMatrix B;
    Vector mean_row;
    SparseMatrix matrix;

    Index num_free() const { return space->num_free_velocity_dofs(); }
    Index size() const { return matrix.rows(); }
};

SaddleSystem assemble_stokes(std::shared_ptr<const TaylorHoodSpace> space, double nu);

/// Divergence-form convection:  v.N(u) = - int (u (x) u) : grad v  for every velocity basis v.
Vector assemble_convection(const FEField& u);

struct DiracForce {
    Point z;
    Eigen::Vector2d F;
};

/// Vector measure on a polyline with a density given as a function of arclength.
struct CurveForce {
    std::vector<Point> polyline;
    std::function<Eigen::Vector2d(double)> density;
    std::string density_label;
};

struct AnalyticForce {
    std::function<Eigen::Vector2d(const Point&)> f;
    std::string name;
};

using ForcingSpec = std::variant<DiracForce, CurveForce, AnalyticForce>;

std::string describe(const ForcingSpec& f);
/// True when the forcing is identically zero (F = 0, zero density, or the named zero field).
bool is_zero_forcing(const ForcingSpec& f);

/// Discrete functional  v -> <f, v>  on all velocity basis functions (constrained entries are
/// computed too; solvers ignore them).
/// Dirac: F . v(z). Curve: 4-point Gauss on every piece of the polyline clipped to the cells.
/// Analytic: cellwise quadrature of f . v.
Vector assemble_forcing(const TaylorHoodSpace& space, const ForcingSpec& f);

} // namespace wns

#endif
