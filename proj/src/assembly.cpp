#include "wns/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wns {

SaddleSystem assemble_stokes(std::shared_ptr<const TaylorHoodSpace> space, double nu)
{
    WNS_REQUIRE(std::isfinite(nu) && nu > 0.0, InvalidArgument, "viscosity nu must be > 0");
    const TaylorHoodSpace& sp = *space;
    const TriMesh& mesh = sp.mesh();
    SaddleSystem sys;
    sys.space = space;
    sys.nu = nu;
    sys.A = nu * weighted_velocity_stiffness(sp, Weight::constant(1.0));

    const auto& rule = triangle_rule(2);
    std::vector<Eigen::Triplet<double>> trip;
    sys.mean_row = Vector::Zero(sp.num_pressure_dofs());
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const double area = mesh.signed_area(c);
        const auto& nodes = sp.cell_nodes(c);
        Eigen::Matrix<double, 3, 12> local = Eigen::Matrix<double, 3, 12>::Zero();
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& l = rule.points[q];
            const auto b = p2_basis(mesh, c, l);
            const double wq = area * rule.weights[q];
            for (int i = 0; i < 3; ++i)
                for (int k = 0; k < 6; ++k)
                    for (int comp = 0; comp < 2; ++comp)
                        local(i, comp * 6 + k) += wq * l[static_cast<std::size_t>(i)] * b.grad[static_cast<std::size_t>(k)](comp);
        }
        for (int i = 0; i < 3; ++i) {
            sys.mean_row(nodes[static_cast<std::size_t>(i)]) += area / 3.0;
            for (int k = 0; k < 6; ++k)
                for (int comp = 0; comp < 2; ++comp)
                    trip.emplace_back(nodes[static_cast<std::size_t>(i)],
                                      sp.velocity_dof(nodes[static_cast<std::size_t>(k)], comp), local(i, comp * 6 + k));
        }
    }
    sys.B.resize(sp.num_pressure_dofs(), sp.num_velocity_dofs());
    sys.B.setFromTriplets(trip.begin(), trip.end());

    // free-dof saddle matrix
    const Index nf = sp.num_free_velocity_dofs();
    const Index np = sp.num_pressure_dofs();
    const auto& fi = sp.free_index();
    std::vector<Eigen::Triplet<double>> big;
    big.reserve(static_cast<std::size_t>(sys.A.nonZeros() + 2 * sys.B.nonZeros() + 2 * np));
    for (int k = 0; k < sys.A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(sys.A, k); it; ++it) {
            const Index r = fi[static_cast<std::size_t>(it.row())];
            const Index cidx = fi[static_cast<std::size_t>(it.col())];
            if (r >= 0 && cidx >= 0) big.emplace_back(r, cidx, it.value());
        }
    for (int k = 0; k < sys.B.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(sys.B, k); it; ++it) {
            const Index col = fi[static_cast<std::size_t>(it.col())];
            if (col < 0) continue;
            big.emplace_back(nf + it.row(), col, -it.value());
            big.emplace_back(col, nf + it.row(), -it.value());
        }
    for (Index p = 0; p < np; ++p) {
        big.emplace_back(nf + p, nf + np, sys.mean_row(p));
        big.emplace_back(nf + np, nf + p, sys.mean_row(p));
    }
    sys.matrix.resize(nf + np + 1, nf + np + 1);
    sys.matrix.setFromTriplets(big.begin(), big.end());
    sys.matrix.makeCompressed();
    return sys;
}

Vector assemble_convection(const FEField& u)
{
    const TaylorHoodSpace& sp = *u.space;
    const TriMesh& mesh = sp.mesh();
    const auto& rule = triangle_rule(6);
    Vector out = Vector::Zero(sp.num_velocity_dofs());
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const double area = mesh.signed_area(c);
        const auto& nodes = sp.cell_nodes(c);
        std::array<double, 12> local{};
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto b = p2_basis(mesh, c, rule.points[q]);
            Eigen::Vector2d val = Eigen::Vector2d::Zero();
            for (std::size_t k = 0; k < 6; ++k) {
                val.x() += u.velocity(sp.velocity_dof(nodes[k], 0)) * b.value[k];
                val.y() += u.velocity(sp.velocity_dof(nodes[k], 1)) * b.value[k];
            }
            const double wq = area * rule.weights[q];
            // -(u (x) u) : grad(phi e_i) = -u_i (u . grad phi)
            for (std::size_t k = 0; k < 6; ++k) {
                const double adv = val.dot(b.grad[k]);
                local[k] -= wq * val.x() * adv;
                local[6 + k] -= wq * val.y() * adv;
            }
        }
        for (std::size_t k = 0; k < 6; ++k) {
            out(sp.velocity_dof(nodes[k], 0)) += local[k];
            out(sp.velocity_dof(nodes[k], 1)) += local[6 + k];
        }
    }
    return out;
}

std::string describe(const ForcingSpec& f)
{
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&os](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, DiracForce>)
                os << "dirac(z=(" << v.z.x() << "," << v.z.y() << "),F=(" << v.F.x() << "," << v.F.y() << "))";
            else if constexpr (std::is_same_v<T, CurveForce>)
                os << "curve(points=" << v.polyline.size() << ",density=" << v.density_label << ")";
            else
                os << "analytic(" << v.name << ")";
        },
        f);
    return os.str();
}

bool is_zero_forcing(const ForcingSpec& f)
{
    if (const auto* d = std::get_if<DiracForce>(&f)) return d->F.isZero(0.0);
    if (const auto* a = std::get_if<AnalyticForce>(&f)) return a->name == "zero";
    return false;
}

namespace {

bool on_mesh_boundary(const TriMesh& mesh, const Point& x)
{
    const double tol = 1e-12 * mesh.h_max();
    for (const auto& e : mesh.boundary_edges()) {
        const Point& a = mesh.points()[static_cast<std::size_t>(e.a)];
        const Point& b = mesh.points()[static_cast<std::size_t>(e.b)];
        const Point d = b - a;
        const double t = (x - a).dot(d) / d.squaredNorm();
        if (t >= -1e-12 && t <= 1.0 + 1e-12 && std::abs(cross(d, x - a)) / d.norm() <= tol) return true;
    }
    return false;
}

void add_point_load(const TaylorHoodSpace& sp, Index cell, const std::array<double, 3>& bary,
                    const Eigen::Vector2d& load, Vector& out)
{
    const auto b = p2_basis(sp.mesh(), cell, bary);
    const auto& nodes = sp.cell_nodes(cell);
    for (std::size_t k = 0; k < 6; ++k) {
        out(sp.velocity_dof(nodes[k], 0)) += load.x() * b.value[k];
        out(sp.velocity_dof(nodes[k], 1)) += load.y() * b.value[k];
    }
}

/// Parameter interval of segment p + t d, t in [0, 1], inside a closed triangle.
bool clip_to_cell(const TriMesh& mesh, Index c, const Point& p, const Point& d, double tol, double& t0, double& t1)
{
    const auto v = mesh.vertices(c);
    t0 = 0.0;
    t1 = 1.0;
    for (int k = 0; k < 3; ++k) {
        const Point& a = v[static_cast<std::size_t>(k)];
        const Point e = v[static_cast<std::size_t>((k + 1) % 3)] - a;
        const Point n(-e.y(), e.x());
        const double len = e.norm();
        // inside: n.(p + t d - a) / |e| >= -tol
        const double f0 = n.dot(p - a) / len + tol;
        const double fd = n.dot(d) / len;
        if (fd == 0.0) {
            if (f0 < 0.0) return false;
            continue;
        }
        const double t = -f0 / fd;
        if (fd > 0.0)
            t0 = std::max(t0, t);
        else
            t1 = std::min(t1, t);
        if (t0 > t1) return false;
    }
    return true;
}

} // namespace

Vector assemble_forcing(const TaylorHoodSpace& sp, const ForcingSpec& f)
{
    const TriMesh& mesh = sp.mesh();
    Vector out = Vector::Zero(sp.num_velocity_dofs());

    if (const auto* dirac = std::get_if<DiracForce>(&f)) {
        const auto loc = mesh.locate(dirac->z);
        WNS_REQUIRE(loc.has_value(), OutsideDomain, "Dirac point lies outside the domain");
        WNS_REQUIRE(!on_mesh_boundary(mesh, dirac->z), OutsideDomain, "Dirac point lies on the boundary");
        add_point_load(sp, loc->cell, loc->bary, dirac->F, out);
        return out;
    }

    if (const auto* curve = std::get_if<CurveForce>(&f)) {
        WNS_REQUIRE(curve->polyline.size() >= 2, InvalidArgument, "curve forcing needs at least two points");
        WNS_REQUIRE(static_cast<bool>(curve->density), InvalidArgument, "curve forcing needs a density");
        for (const auto& p : curve->polyline) {
            WNS_REQUIRE(p.allFinite() && mesh.locate(p).has_value() && !on_mesh_boundary(mesh, p), OutsideDomain,
                        "curve forcing polyline leaves the domain interior");
        }
        static const Rule1D gauss4 = gauss_legendre(4);
        const double tol = 1e-12 * mesh.h_max();
        double arc0 = 0.0;
        for (std::size_t s = 0; s + 1 < curve->polyline.size(); ++s) {
            const Point p = curve->polyline[s];
            const Point d = curve->polyline[s + 1] - p;
            const double len = d.norm();
            if (len == 0.0) continue;
            struct Piece {
                double t0, t1;
                Index cell;
            };
            std::vector<Piece> pieces;
            for (Index c : mesh.cells_near(p.cwiseMin(p + d), p.cwiseMax(p + d))) {
                double t0, t1;
                if (clip_to_cell(mesh, c, p, d, tol, t0, t1) && (t1 - t0) * len > tol) pieces.push_back({t0, t1, c});
            }
            std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
                return a.t0 != b.t0 ? a.t0 < b.t0 : a.cell < b.cell;
            });
            // Cells overlap only along shared edges; keep each parameter range once.
            double covered = 0.0;
            for (const auto& piece : pieces) {
                const double a = std::max(piece.t0, covered);
                const double b = piece.t1;
                if ((b - a) * len <= tol) continue;
                for (std::size_t q = 0; q < gauss4.x.size(); ++q) {
                    const double t = a + (b - a) * gauss4.x[q];
                    const Point x = p + t * d;
                    const Eigen::Vector2d load = curve->density(arc0 + t * len) * (gauss4.w[q] * (b - a) * len);
                    add_point_load(sp, piece.cell, mesh.barycentric(piece.cell, x), load, out);
                }
                covered = std::max(covered, b);
            }
            arc0 += len;
        }
        return out;
    }

    const auto& analytic = std::get<AnalyticForce>(f);
    WNS_REQUIRE(static_cast<bool>(analytic.f), InvalidArgument, "analytic forcing needs a callback");
    const auto& rule = triangle_rule(8);
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const double area = mesh.signed_area(c);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Eigen::Vector2d val = analytic.f(mesh.map_to_physical(c, rule.points[q]));
            add_point_load(sp, c, rule.points[q], val * (area * rule.weights[q]), out);
        }
    }
    return out;
}

} // namespace wns
