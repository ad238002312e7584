#include "wns/femspace.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace wns {

// ---------------------------------------------------------------------------------------------
// Space

TaylorHoodSpace::TaylorHoodSpace(std::shared_ptr<const TriMesh> mesh) : mesh_(std::move(mesh))
{
    WNS_REQUIRE(mesh_ != nullptr, InvalidArgument, "space needs a mesh");
    const Index nv = mesh_->num_points();
    std::unordered_map<std::uint64_t, Index> edge_id;
    auto key = [](Index a, Index b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
    };
    cell_nodes_.resize(static_cast<std::size_t>(mesh_->num_cells()));
    for (Index c = 0; c < mesh_->num_cells(); ++c) {
        const Cell& cell = mesh_->cells()[static_cast<std::size_t>(c)];
        auto& nodes = cell_nodes_[static_cast<std::size_t>(c)];
        for (int i = 0; i < 3; ++i) nodes[static_cast<std::size_t>(i)] = cell[static_cast<std::size_t>(i)];
        for (int e = 0; e < 3; ++e) {
            const Index a = cell[static_cast<std::size_t>(e)];
            const Index b = cell[static_cast<std::size_t>((e + 1) % 3)];
            auto [it, fresh] = edge_id.try_emplace(key(a, b), static_cast<Index>(edges_.size()));
            if (fresh) edges_.push_back({std::min(a, b), std::max(a, b)});
            nodes[static_cast<std::size_t>(3 + e)] = nv + it->second;
        }
    }
    node_points_ = mesh_->points();
    for (const auto& e : edges_)
        node_points_.push_back(0.5 * (mesh_->points()[static_cast<std::size_t>(e[0])] +
                                      mesh_->points()[static_cast<std::size_t>(e[1])]));

    std::vector<bool> boundary_node(static_cast<std::size_t>(num_nodes()), false);
    for (const auto& e : mesh_->boundary_edges()) {
        boundary_node[static_cast<std::size_t>(e.a)] = true;
        boundary_node[static_cast<std::size_t>(e.b)] = true;
        boundary_node[static_cast<std::size_t>(nv + edge_id.at(key(e.a, e.b)))] = true;
    }
    dirichlet_.assign(static_cast<std::size_t>(num_velocity_dofs()), false);
    free_index_.assign(static_cast<std::size_t>(num_velocity_dofs()), -1);
    num_free_ = 0;
    for (int comp = 0; comp < 2; ++comp)
        for (Index n = 0; n < num_nodes(); ++n) {
            const auto d = static_cast<std::size_t>(velocity_dof(n, comp));
            dirichlet_[d] = boundary_node[static_cast<std::size_t>(n)];
            if (!dirichlet_[d]) free_index_[d] = num_free_++;
        }
}

void TaylorHoodSpace::apply_mask(Vector& velocity) const
{
    for (Index i = 0; i < num_velocity_dofs(); ++i)
        if (dirichlet_[static_cast<std::size_t>(i)]) velocity(i) = 0.0;
}

Vector TaylorHoodSpace::restrict_free(const Vector& velocity) const
{
    Vector out(num_free_);
    for (Index i = 0; i < num_velocity_dofs(); ++i)
        if (const Index f = free_index_[static_cast<std::size_t>(i)]; f >= 0) out(f) = velocity(i);
    return out;
}

Vector TaylorHoodSpace::extend_free(const Vector& free) const
{
    Vector out = Vector::Zero(num_velocity_dofs());
    for (Index i = 0; i < num_velocity_dofs(); ++i)
        if (const Index f = free_index_[static_cast<std::size_t>(i)]; f >= 0) out(i) = free(f);
    return out;
}

TaylorHoodSpace build_space(std::shared_ptr<const TriMesh> mesh)
{
    return TaylorHoodSpace(std::move(mesh));
}

// ---------------------------------------------------------------------------------------------
// Basis

std::array<Point, 3> barycentric_gradients(const TriMesh& mesh, Index cell)
{
    const auto [a, b, c] = mesh.vertices(cell);
    const double det = cross(b - a, c - a);
    // grad(lambda_i) = rot(opposite edge) / det
    const Point g1 = Point(c.y() - a.y(), a.x() - c.x()) / det;
    const Point g2 = Point(a.y() - b.y(), b.x() - a.x()) / det;
    return {-g1 - g2, g1, g2};
}

P2Basis p2_basis(const TriMesh& mesh, Index cell, const std::array<double, 3>& l)
{
    const auto g = barycentric_gradients(mesh, cell);
    P2Basis b;
    for (int i = 0; i < 3; ++i) {
        b.value[static_cast<std::size_t>(i)] = l[static_cast<std::size_t>(i)] * (2.0 * l[static_cast<std::size_t>(i)] - 1.0);
        b.grad[static_cast<std::size_t>(i)] = (4.0 * l[static_cast<std::size_t>(i)] - 1.0) * g[static_cast<std::size_t>(i)];
    }
    for (int e = 0; e < 3; ++e) {
        const auto i = static_cast<std::size_t>(e);
        const auto j = static_cast<std::size_t>((e + 1) % 3);
        b.value[3 + i] = 4.0 * l[i] * l[j];
        b.grad[3 + i] = 4.0 * (l[j] * g[i] + l[i] * g[j]);
    }
    return b;
}

// ---------------------------------------------------------------------------------------------
// Fields

FEField FEField::zero(std::shared_ptr<const TaylorHoodSpace> space)
{
    FEField f;
    f.velocity = Vector::Zero(space->num_velocity_dofs());
    f.pressure = Vector::Zero(space->num_pressure_dofs());
    f.space = std::move(space);
    return f;
}

FieldValue eval_in_cell(const FEField& f, Index cell, const std::array<double, 3>& bary)
{
    const auto& space = *f.space;
    const auto basis = p2_basis(space.mesh(), cell, bary);
    const auto& nodes = space.cell_nodes(cell);
    FieldValue out;
    for (int comp = 0; comp < 2; ++comp)
        for (std::size_t k = 0; k < 6; ++k) {
            const double coef = f.velocity(space.velocity_dof(nodes[k], comp));
            out.velocity(comp) += coef * basis.value[k];
            out.gradient.row(comp) += coef * basis.grad[k].transpose();
        }
    for (std::size_t k = 0; k < 3; ++k) out.pressure += f.pressure(nodes[k]) * bary[k];
    return out;
}

FieldValue eval_field(const FEField& f, const Point& x)
{
    const auto loc = f.space->mesh().locate(x);
    WNS_REQUIRE(loc.has_value(), OutsideDomain, "evaluation point lies outside the mesh");
    return eval_in_cell(f, loc->cell, loc->bary);
}

FEField interpolate(std::shared_ptr<const TaylorHoodSpace> space, const VelocityFn& u, const PressureFn& p,
                    bool apply_mask)
{
    FEField f = FEField::zero(space);
    for (Index n = 0; n < space->num_nodes(); ++n) {
        const Point& x = space->node_points()[static_cast<std::size_t>(n)];
        const Eigen::Vector2d val = u ? u(x) : Eigen::Vector2d::Zero();
        WNS_REQUIRE(val.allFinite(), InvalidArgument, "velocity callback is not finite at a node");
        f.velocity(space->velocity_dof(n, 0)) = val.x();
        f.velocity(space->velocity_dof(n, 1)) = val.y();
    }
    for (Index v = 0; v < space->num_pressure_dofs(); ++v) {
        const double val = p ? p(space->mesh().points()[static_cast<std::size_t>(v)]) : 0.0;
        WNS_REQUIRE(std::isfinite(val), InvalidArgument, "pressure callback is not finite at a node");
        f.pressure(v) = val;
    }
    if (apply_mask) space->apply_mask(f.velocity);
    return f;
}

FEField transfer(const FEField& from, std::shared_ptr<const TaylorHoodSpace> to)
{
    FEField out = FEField::zero(to);
    for (Index n = 0; n < to->num_nodes(); ++n) {
        const auto v = eval_field(from, to->node_points()[static_cast<std::size_t>(n)]);
        out.velocity(to->velocity_dof(n, 0)) = v.velocity.x();
        out.velocity(to->velocity_dof(n, 1)) = v.velocity.y();
        if (n < to->num_pressure_dofs()) out.pressure(n) = v.pressure;
    }
    to->apply_mask(out.velocity);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Weighted quadrature

namespace {

using Bary = std::array<double, 3>;

double point_triangle_distance(const Point& z, const std::array<Point, 3>& t)
{
    const double det = cross(t[1] - t[0], t[2] - t[0]);
    const double l1 = cross(z - t[0], t[2] - t[0]) / det;
    const double l2 = cross(t[1] - t[0], z - t[0]) / det;
    const double eps = -1e-14;
    if (l1 >= eps && l2 >= eps && 1.0 - l1 - l2 >= eps) return 0.0;
    double d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        const Point& a = t[static_cast<std::size_t>(k)];
        const Point e = t[static_cast<std::size_t>((k + 1) % 3)] - a;
        const double s = std::clamp((z - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
        d = std::min(d, (a + s * e - z).norm());
    }
    return d;
}

double tri_diameter(const std::array<Point, 3>& t)
{
    return std::max({(t[0] - t[1]).norm(), (t[1] - t[2]).norm(), (t[2] - t[0]).norm()});
}

struct SingularCellBuilder {
    const TriMesh& mesh;
    const Weight& w;
    Index cell;
    int degree;
    double parent_area;
    std::vector<CellPoint> out;

    Point phys(const Bary& b) const { return mesh.map_to_physical(cell, b); }

    void plain(const std::array<Bary, 3>& sub, int order)
    {
        const auto& rule = triangle_rule(order);
        const std::array<Point, 3> p{phys(sub[0]), phys(sub[1]), phys(sub[2])};
        const double area = 0.5 * std::abs(cross(p[1] - p[0], p[2] - p[0]));
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& r = rule.points[q];
            Bary b{};
            for (int k = 0; k < 3; ++k)
                b[static_cast<std::size_t>(k)] = r[0] * sub[0][static_cast<std::size_t>(k)] +
                                                 r[1] * sub[1][static_cast<std::size_t>(k)] +
                                                 r[2] * sub[2][static_cast<std::size_t>(k)];
            out.push_back({b, area * rule.weights[q] * w(phys(b))});
        }
    }

    void radial(const std::array<Bary, 3>& sub)
    {
        const std::array<Point, 3> p{phys(sub[0]), phys(sub[1]), phys(sub[2])};
        for (int k = 0; k < 3; ++k)
            for (const auto& q : radial_singular_rule(w.center(), p[static_cast<std::size_t>(k)],
                                                      p[static_cast<std::size_t>((k + 1) % 3)], w.alpha(), degree))
                out.push_back({mesh.barycentric(cell, q.x), w.coefficient() * q.w});
    }

    void recurse(const std::array<Bary, 3>& sub, int depth)
    {
        const std::array<Point, 3> p{phys(sub[0]), phys(sub[1]), phys(sub[2])};
        const double diam = tri_diameter(p);
        const double dist = point_triangle_distance(w.center(), p);
        if (dist >= diam) return plain(sub, degree + 8);
        if (depth >= 20) {
            if (dist == 0.0) return radial(sub);
            return plain(sub, degree + 8);
        }
        auto mid = [](const Bary& a, const Bary& b) {
            return Bary{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
        };
        const Bary m01 = mid(sub[0], sub[1]);
        const Bary m12 = mid(sub[1], sub[2]);
        const Bary m20 = mid(sub[2], sub[0]);
        recurse({sub[0], m01, m20}, depth + 1);
        recurse({m01, sub[1], m12}, depth + 1);
        recurse({m20, m12, sub[2]}, depth + 1);
        recurse({m01, m12, m20}, depth + 1);
    }
};

/// Replace a long rule by one on fixed interior nodes with the same moments for all
/// polynomials of total degree <= `degree` (minimum-norm moment fit).
std::vector<CellPoint> compress(const std::vector<CellPoint>& fine, int degree)
{
    const auto& nodes = triangle_rule(degree + 4);
    const int dim = (degree + 1) * (degree + 2) / 2;
    const auto nn = static_cast<Eigen::Index>(nodes.points.size());
    if (static_cast<Eigen::Index>(fine.size()) <= nn) return fine;
    auto monomials = [degree, dim](const Bary& b) {
        Eigen::VectorXd m(dim);
        int k = 0;
        for (int total = 0; total <= degree; ++total)
            for (int a = 0; a <= total; ++a) m(k++) = std::pow(b[1], a) * std::pow(b[2], total - a);
        return m;
    };
    Eigen::VectorXd moments = Eigen::VectorXd::Zero(dim);
    for (const auto& q : fine) moments += q.w * monomials(q.bary);
    Eigen::MatrixXd vander(dim, nn);
    for (Eigen::Index j = 0; j < nn; ++j) vander.col(j) = monomials(nodes.points[static_cast<std::size_t>(j)]);
    const Eigen::VectorXd weights = vander.completeOrthogonalDecomposition().solve(moments);
    std::vector<CellPoint> out;
    out.reserve(static_cast<std::size_t>(nn));
    for (Eigen::Index j = 0; j < nn; ++j) out.push_back({nodes.points[static_cast<std::size_t>(j)], weights(j)});
    return out;
}

} // namespace

WeightedQuadrature::WeightedQuadrature(const TriMesh& mesh, const Weight& w, int degree)
    : weight_(w), degree_(degree)
{
    WNS_REQUIRE(degree >= 0, InvalidArgument, "quadrature degree must be non-negative");
    rules_.resize(static_cast<std::size_t>(mesh.num_cells()));
    const auto singular = w.singular_point();
    const auto& base = triangle_rule(degree);
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        auto& rule = rules_[static_cast<std::size_t>(c)];
        const double area = mesh.signed_area(c);
        const auto verts = mesh.vertices(c);
        const double diam = mesh.diameter(c);
        const double dist = singular ? point_triangle_distance(*singular, verts) : 0.0;
        if (!singular || dist >= 8.0 * diam) {
            rule.reserve(base.points.size());
            for (std::size_t q = 0; q < base.points.size(); ++q) {
                const double wq = singular ? w(mesh.map_to_physical(c, base.points[q])) : w.coefficient();
                rule.push_back({base.points[q], area * base.weights[q] * wq});
            }
            continue;
        }
        SingularCellBuilder builder{mesh, w, c, degree, area, {}};
        const std::array<Bary, 3> whole{Bary{1, 0, 0}, Bary{0, 1, 0}, Bary{0, 0, 1}};
        if (dist >= diam)
            builder.plain(whole, degree + 8);
        else
            builder.recurse(whole, 0);
        rule = dist >= diam ? std::move(builder.out) : compress(builder.out, degree);
    }
}

double norm_Lpw(const TriMesh& mesh, const WeightedQuadrature& quad, const CellScalar& g, double p)
{
    double s = 0.0;
    for (Index c = 0; c < mesh.num_cells(); ++c)
        for (const auto& q : quad.cell(c)) {
            const double v = std::abs(g(c, q.bary, mesh.map_to_physical(c, q.bary)));
            s += q.w * std::pow(v, p);
        }
    return std::pow(std::max(s, 0.0), 1.0 / p);
}

double norm_L2w(const TriMesh& mesh, const CellScalar& g, const Weight& w, int degree)
{
    return norm_Lpw(mesh, WeightedQuadrature(mesh, w, std::max(degree, 6)), g, 2.0);
}

double norm_L4w(const TriMesh& mesh, const CellScalar& g, const Weight& w, int degree)
{
    return norm_Lpw(mesh, WeightedQuadrature(mesh, w, std::max(degree, 6)), g, 4.0);
}

CellScalar velocity_magnitude(const FEField& f)
{
    return [&f](Index c, const Bary& b, const Point&) { return eval_in_cell(f, c, b).velocity.norm(); };
}

CellScalar gradient_magnitude(const FEField& f)
{
    return [&f](Index c, const Bary& b, const Point&) { return eval_in_cell(f, c, b).gradient.norm(); };
}

CellScalar pressure_value(const FEField& f)
{
    return [&f](Index c, const Bary& b, const Point&) {
        const auto& nodes = f.space->cell_nodes(c);
        return f.pressure(nodes[0]) * b[0] + f.pressure(nodes[1]) * b[1] + f.pressure(nodes[2]) * b[2];
    };
}

double seminorm_H1w(const FEField& f, const Weight& w)
{
    return norm_L2w(f.space->mesh(), gradient_magnitude(f), w, 6);
}

double velocity_L4w(const FEField& f, const Weight& w)
{
    return norm_L4w(f.space->mesh(), velocity_magnitude(f), w, 8);
}

double quotient_pressure_norm(const TriMesh& mesh, const CellScalar& p, const Weight& w, int degree)
{
    const WeightedQuadrature quad(mesh, w, std::max(degree, 6));
    double num = 0.0;
    double den = 0.0;
    for (Index c = 0; c < mesh.num_cells(); ++c)
        for (const auto& q : quad.cell(c)) {
            num += q.w * p(c, q.bary, mesh.map_to_physical(c, q.bary));
            den += q.w;
        }
    WNS_REQUIRE(den > 0.0 && std::isfinite(den), NumericalFailure, "weight has no finite positive integral");
    const double mean = num / den;
    double s = 0.0;
    for (Index c = 0; c < mesh.num_cells(); ++c)
        for (const auto& q : quad.cell(c)) {
            const double d = p(c, q.bary, mesh.map_to_physical(c, q.bary)) - mean;
            s += q.w * d * d;
        }
    return std::sqrt(std::max(s, 0.0));
}

double quotient_pressure_norm(const FEField& f, const Weight& w)
{
    return quotient_pressure_norm(f.space->mesh(), pressure_value(f), w, 6);
}

// ---------------------------------------------------------------------------------------------
// Gram matrices

SparseMatrix weighted_velocity_stiffness(const TaylorHoodSpace& space, const Weight& w)
{
    const TriMesh& mesh = space.mesh();
    const WeightedQuadrature quad(mesh, w, 6);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.num_cells()) * 72);
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
        for (const auto& q : quad.cell(c)) {
            const auto b = p2_basis(mesh, c, q.bary);
            for (std::size_t i = 0; i < 6; ++i)
                for (std::size_t j = 0; j < 6; ++j)
                    local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += q.w * b.grad[i].dot(b.grad[j]);
        }
        const auto& nodes = space.cell_nodes(c);
        for (int comp = 0; comp < 2; ++comp)
            for (std::size_t i = 0; i < 6; ++i)
                for (std::size_t j = 0; j < 6; ++j)
                    trip.emplace_back(space.velocity_dof(nodes[i], comp), space.velocity_dof(nodes[j], comp),
                                      local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    SparseMatrix k(space.num_velocity_dofs(), space.num_velocity_dofs());
    k.setFromTriplets(trip.begin(), trip.end());
    return k;
}

SparseMatrix weighted_pressure_mass(const TaylorHoodSpace& space, const Weight& w)
{
    const TriMesh& mesh = space.mesh();
    const WeightedQuadrature quad(mesh, w, 6);
    std::vector<Eigen::Triplet<double>> trip;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        Eigen::Matrix3d local = Eigen::Matrix3d::Zero();
        for (const auto& q : quad.cell(c))
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    local(i, j) += q.w * q.bary[static_cast<std::size_t>(i)] * q.bary[static_cast<std::size_t>(j)];
        const auto& nodes = space.cell_nodes(c);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trip.emplace_back(nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(j)], local(i, j));
    }
    SparseMatrix m(space.num_pressure_dofs(), space.num_pressure_dofs());
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

WeightedNorms::WeightedNorms(std::shared_ptr<const TaylorHoodSpace> space, const Weight& w)
    : space_(std::move(space)), weight_(w)
{
    stiffness_ = weighted_velocity_stiffness(*space_, w);
    mass_ = weighted_pressure_mass(*space_, w);
    moment_ = mass_ * Vector::Ones(mass_.cols());
    total_weight_ = moment_.sum();

    const auto& fi = space_->free_index();
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < stiffness_.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(stiffness_, k); it; ++it) {
            const Index r = fi[static_cast<std::size_t>(it.row())];
            const Index c = fi[static_cast<std::size_t>(it.col())];
            if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
        }
    free_stiffness_.resize(space_->num_free_velocity_dofs(), space_->num_free_velocity_dofs());
    free_stiffness_.setFromTriplets(trip.begin(), trip.end());
    if (space_->num_free_velocity_dofs() > 0) {
        factor_.compute(free_stiffness_);
        WNS_REQUIRE(factor_.info() == Eigen::Success, NumericalFailure,
                    "weighted stiffness matrix is not positive definite on the free dofs");
    }
}

double WeightedNorms::h1_seminorm(const Vector& velocity) const
{
    return std::sqrt(std::max(velocity.dot(stiffness_ * velocity), 0.0));
}

double WeightedNorms::pressure_quotient(const Vector& pressure) const
{
    const double mean = pressure.dot(moment_) / total_weight_;
    const Vector d = pressure - Vector::Constant(pressure.size(), mean);
    return std::sqrt(std::max(d.dot(mass_ * d), 0.0));
}

Vector WeightedNorms::solve_free(const Vector& rhs_free) const
{
    if (rhs_free.size() == 0) return rhs_free;
    return factor_.solve(rhs_free);
}

Vector WeightedNorms::riesz(const Vector& functional) const
{
    return space_->extend_free(solve_free(space_->restrict_free(functional)));
}

double WeightedNorms::dual_norm(const Vector& functional) const
{
    const Vector l = space_->restrict_free(functional);
    if (l.size() == 0) return 0.0;
    return std::sqrt(std::max(l.dot(solve_free(l)), 0.0));
}

} // namespace wns
