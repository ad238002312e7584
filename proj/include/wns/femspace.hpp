#ifndef WNS_FEMSPACE_HPP
#define WNS_FEMSPACE_HPP

#include "wns/common.hpp"
#include "wns/mesh.hpp"
#include "wns/quadrature.hpp"
#include "wns/weights.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <memory>
#include <vector>

namespace wns {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Grad = Eigen::Matrix2d; ///< row i = gradient of component i

/// Taylor-Hood P2/P1 pair on a triangulation.
///
/// Velocity nodes are the mesh vertices (indices 0..V-1) followed by the edge midpoints
/// (V..V+E-1). Velocity dofs are component-blocked: dof(node, c) = c * num_nodes + node.
/// Pressure dofs are the vertices. Local P2 node order on a cell is v0, v1, v2, e01, e12, e20.
class TaylorHoodSpace {
public:
    explicit TaylorHoodSpace(std::shared_ptr<const TriMesh> mesh);

    const TriMesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }

    Index num_nodes() const { return static_cast<Index>(node_points_.size()); }
    Index num_velocity_dofs() const { return 2 * num_nodes(); }
    Index num_pressure_dofs() const { return mesh_->num_points(); }
    Index num_edges() const { return static_cast<Index>(edges_.size()); }

    Index velocity_dof(Index node, int component) const { return component * num_nodes() + node; }
    const std::array<Index, 6>& cell_nodes(Index cell) const { return cell_nodes_[static_cast<std::size_t>(cell)]; }
    const std::vector<Point>& node_points() const { return node_points_; }
    const std::vector<std::array<Index, 2>>& edges() const { return edges_; }

    /// True for velocity dofs on the boundary (u = 0 there).
    const std::vector<bool>& dirichlet_mask() const { return dirichlet_; }
    /// Position of a velocity dof among the free dofs, or -1 when constrained.
    const std::vector<Index>& free_index() const { return free_index_; }
    Index num_free_velocity_dofs() const { return num_free_; }

    /// Zero the constrained velocity entries.
    void apply_mask(Vector& velocity) const;
    Vector restrict_free(const Vector& velocity) const;
    Vector extend_free(const Vector& free) const;

    std::uint64_t checksum() const { return mesh_->checksum(); }

private:
    std::shared_ptr<const TriMesh> mesh_;
    std::vector<std::array<Index, 2>> edges_;
    std::vector<std::array<Index, 6>> cell_nodes_;
    std::vector<Point> node_points_;
    std::vector<bool> dirichlet_;
    std::vector<Index> free_index_;
    Index num_free_ = 0;
};

TaylorHoodSpace build_space(std::shared_ptr<const TriMesh> mesh);

/// Local P2 basis values and gradients at a barycentric point of a cell.
struct P2Basis {
    std::array<double, 6> value{};
    std::array<Point, 6> grad{};
};
P2Basis p2_basis(const TriMesh& mesh, Index cell, const std::array<double, 3>& bary);

/// Gradients of the three barycentric coordinates (constant on the cell).
std::array<Point, 3> barycentric_gradients(const TriMesh& mesh, Index cell);

/// Discrete velocity/pressure pair.
struct FEField {
    std::shared_ptr<const TaylorHoodSpace> space;
    Vector velocity;
    Vector pressure;

    static FEField zero(std::shared_ptr<const TaylorHoodSpace> space);
};

struct FieldValue {
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
    Grad gradient = Grad::Zero();
    double pressure = 0.0;
};

/// Evaluation inside a known cell.
FieldValue eval_in_cell(const FEField& f, Index cell, const std::array<double, 3>& bary);
/// Throws OutsideDomain for points outside the mesh.
FieldValue eval_field(const FEField& f, const Point& x);

/// Nodal interpolation of analytic data.
using VelocityFn = std::function<Eigen::Vector2d(const Point&)>;
using PressureFn = std::function<double(const Point&)>;
FEField interpolate(std::shared_ptr<const TaylorHoodSpace> space, const VelocityFn& u, const PressureFn& p,
                    bool apply_mask = true);

/// Transfer onto another (typically finer, nested) space by nodal evaluation.
FEField transfer(const FEField& from, std::shared_ptr<const TaylorHoodSpace> to);

/// Quadrature point of a cell in barycentric coordinates; the weight includes |T| and the
/// Muckenhoupt weight.
struct CellPoint {
    std::array<double, 3> bary;
    double w;
};

/// Per-cell rules for integrals  int_T g w  with g smooth on each cell. Cells far from the
/// weight's singular point use the plain rule of the requested degree; nearby cells get a
/// higher-degree rule; cells within one diameter are red-refined recursively (depth cap 20)
/// and the leaf still containing the singular point is integrated by radial Gauss-Jacobi.
class WeightedQuadrature {
public:
    WeightedQuadrature(const TriMesh& mesh, const Weight& w, int degree);

    const std::vector<CellPoint>& cell(Index c) const { return rules_[static_cast<std::size_t>(c)]; }
    Index num_cells() const { return static_cast<Index>(rules_.size()); }
    int degree() const { return degree_; }
    const Weight& weight() const { return weight_; }

private:
    Weight weight_;
    int degree_;
    std::vector<std::vector<CellPoint>> rules_;
};

/// Pointwise scalar of a cellwise-evaluable field (its magnitude for norms, its value for the
/// quotient norm).
using CellScalar = std::function<double(Index cell, const std::array<double, 3>& bary, const Point& x)>;

/// (int |g|^p w)^(1/p) over the mesh.
double norm_Lpw(const TriMesh& mesh, const WeightedQuadrature& quad, const CellScalar& g, double p);

/// Convenience norms of a discrete field. Default quadrature degree is 6 for L2 and 8 for L4.
double norm_L2w(const TriMesh& mesh, const CellScalar& g, const Weight& w, int degree = 6);
double norm_L4w(const TriMesh& mesh, const CellScalar& g, const Weight& w, int degree = 8);
double seminorm_H1w(const FEField& f, const Weight& w);
double velocity_L4w(const FEField& f, const Weight& w);

/// || p - c* ||_{L2(w)} with c* the weighted mean of the signed pressure-like field p.
double quotient_pressure_norm(const TriMesh& mesh, const CellScalar& p, const Weight& w, int degree = 6);
double quotient_pressure_norm(const FEField& f, const Weight& w);

/// Cellwise evaluators for discrete fields.
CellScalar velocity_magnitude(const FEField& f);
CellScalar gradient_magnitude(const FEField& f);
CellScalar pressure_value(const FEField& f);

/// Weighted Gram matrices on the full (unmasked) dof sets.
/// Stiffness: int w grad(phi_i) . grad(phi_j), block diagonal over the two velocity components.
SparseMatrix weighted_velocity_stiffness(const TaylorHoodSpace& space, const Weight& w);
/// Mass: int w psi_i psi_j on the P1 pressure space.
SparseMatrix weighted_pressure_mass(const TaylorHoodSpace& space, const Weight& w);

/// Cached weighted norms for one (space, weight) pair:
///   ||grad v||_{L2(w)} = sqrt(v' K v), the quotient pressure norm from the P1 mass matrix, and
///   the discrete dual norm  sup_v l(v) / ||grad v||_{L2(w)}  over masked velocities.
class WeightedNorms {
public:
    WeightedNorms(std::shared_ptr<const TaylorHoodSpace> space, const Weight& w);

    const Weight& weight() const { return weight_; }
    const SparseMatrix& stiffness() const { return stiffness_; }
    const SparseMatrix& pressure_mass() const { return mass_; }
    const Vector& pressure_moment() const { return moment_; } ///< M 1

    double h1_seminorm(const Vector& velocity) const;
    double pressure_quotient(const Vector& pressure) const;
    /// Dual norm of a functional given by its values on all velocity basis functions;
    /// constrained entries are ignored.
    double dual_norm(const Vector& functional) const;
    /// Riesz representative (masked velocity) of a functional w.r.t. the seminorm.
    Vector riesz(const Vector& functional) const;
    /// Solve K_free x = rhs_free.
    Vector solve_free(const Vector& rhs_free) const;
    const SparseMatrix& free_stiffness() const { return free_stiffness_; }

private:
    std::shared_ptr<const TaylorHoodSpace> space_;
    Weight weight_;
    SparseMatrix stiffness_;
    SparseMatrix free_stiffness_;
    SparseMatrix mass_;
    Vector moment_;
    double total_weight_ = 0.0;
    Eigen::SimplicialLDLT<SparseMatrix> factor_;
};

} // namespace wns

#endif
