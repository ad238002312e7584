#include "wns/assembly.hpp"

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace wns;

namespace {

std::shared_ptr<const TaylorHoodSpace> make_space(int n, int refinements = 0)
{
    TriMesh m = generate_uniform(Polygon::unit_square(), n);
    for (int i = 0; i < refinements; ++i) m = uniform_refine(m);
    return std::make_shared<const TaylorHoodSpace>(build_space(std::make_shared<const TriMesh>(std::move(m))));
}

std::shared_ptr<const TaylorHoodSpace> reference_triangle()
{
    std::vector<Point> pts{Point(0, 0), Point(1, 0), Point(0, 1)};
    std::vector<Cell> cells{Cell{0, 1, 2}};
    std::vector<BoundaryEdge> bnd{{0, 1, 0}, {1, 2, 1}, {2, 0, 2}};
    return std::make_shared<const TaylorHoodSpace>(
        build_space(std::make_shared<const TriMesh>(TriMesh(pts, cells, bnd))));
}

FEField random_field(const std::shared_ptr<const TaylorHoodSpace>& sp, std::mt19937_64& rng, bool mask = true)
{
    std::normal_distribution<double> N(0.0, 1.0);
    FEField f = FEField::zero(sp);
    for (Index i = 0; i < f.velocity.size(); ++i) f.velocity(i) = N(rng);
    if (mask) sp->apply_mask(f.velocity);
    return f;
}

Index node_at(const TaylorHoodSpace& sp, const Point& x)
{
    for (Index n = 0; n < sp.num_nodes(); ++n)
        if ((sp.node_points()[n] - x).norm() < 1e-14) return n;
    return -1;
}

} // namespace

TEST(Stokes, StiffnessSymmetricPositive)
{
    const auto sp = make_space(4);
    const SaddleSystem sys = assemble_stokes(sp, 1.0);
    const SparseMatrix At = sys.A.transpose();
    EXPECT_LT((At - sys.A).norm(), 1e-12 * sys.A.norm());
    Eigen::MatrixXd Aff = Eigen::MatrixXd::Zero(sp->num_free_velocity_dofs(), sp->num_free_velocity_dofs());
    const auto& fi = sp->free_index();
    for (int k = 0; k < sys.A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(sys.A, k); it; ++it)
            if (fi[it.row()] >= 0 && fi[it.col()] >= 0) Aff(fi[it.row()], fi[it.col()]) = it.value();
    Eigen::LLT<Eigen::MatrixXd> llt(Aff);
    EXPECT_EQ(llt.info(), Eigen::Success);
    // saddle matrix symmetric
    EXPECT_LT((SparseMatrix(sys.matrix.transpose()) - sys.matrix).norm(), 1e-12 * sys.matrix.norm());
}

TEST(Stokes, DivergenceOperator)
{
    const auto sp = make_space(4);
    const SaddleSystem sys = assemble_stokes(sp, 1.0);
    const FEField c = interpolate(sp, [](const Point&) { return Eigen::Vector2d(0.7, -1.3); }, nullptr, false);
    EXPECT_LT((sys.B * c.velocity).norm(), 1e-13);
    const FEField x = interpolate(sp, [](const Point& p) { return Eigen::Vector2d(p.x(), 0.0); }, nullptr, false);
    EXPECT_NEAR((sys.B * x.velocity).sum(), 1.0, 1e-13);
    EXPECT_NEAR(sys.mean_row.sum(), 1.0, 1e-14);
}

TEST(Stokes, ViscosityScaling)
{
    const auto sp = make_space(3);
    const SaddleSystem a = assemble_stokes(sp, 1.0);
    const SaddleSystem b = assemble_stokes(sp, 2.0);
    EXPECT_EQ((SparseMatrix(2.0 * a.A) - b.A).norm(), 0.0);
    EXPECT_THROW(assemble_stokes(sp, 0.0), InvalidArgument);
    EXPECT_THROW(assemble_stokes(sp, -1.0), InvalidArgument);
}

TEST(Convection, ZeroAndHomogeneity)
{
    const auto sp = make_space(4);
    EXPECT_EQ(assemble_convection(FEField::zero(sp)).norm(), 0.0);
    std::mt19937_64 rng(4);
    FEField u = random_field(sp, rng);
    const Vector n1 = assemble_convection(u);
    u.velocity *= 2.0;
    const Vector n2 = assemble_convection(u);
    EXPECT_LT((n2 - 4.0 * n1).norm(), 1e-12 * n2.norm());
}

TEST(Convection, ReferenceTriangleClosedForm)
{
    // u = (1, 0):  v . N(u) = -int d_x v_x, and by the divergence theorem
    // int d_x phi = sum over edges of (int_e phi) n_x.
    const auto sp = reference_triangle();
    const FEField u = interpolate(sp, [](const Point&) { return Eigen::Vector2d(1.0, 0.0); }, nullptr, false);
    const Vector N = assemble_convection(u);
    const auto& nodes = sp->cell_nodes(0);
    const std::array<double, 6> dx_integral{-1.0 / 6, 1.0 / 6, 0.0, 0.0, 2.0 / 3, -2.0 / 3};
    for (int k = 0; k < 6; ++k) {
        EXPECT_NEAR(N(sp->velocity_dof(nodes[k], 0)), -dx_integral[k], 1e-14) << k;
        EXPECT_NEAR(N(sp->velocity_dof(nodes[k], 1)), 0.0, 1e-14) << k;
    }
}

TEST(Convection, BoundedRatioLightweight)
{
    std::mt19937_64 rng(12);
    const Weight w = Weight::radial(Point(0.5, 0.5), 0.5);
    double prev = 0.0;
    for (int level = 0; level < 2; ++level) {
        const auto sp = make_space(4, level);
        const WeightedNorms nw(sp, w), ni(sp, w.inverse());
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const FEField v = random_field(sp, rng), z = random_field(sp, rng);
            const double r = std::abs(z.velocity.dot(assemble_convection(v))) /
                             (std::pow(nw.h1_seminorm(v.velocity), 2) * ni.h1_seminorm(z.velocity));
            worst = std::max(worst, r);
        }
        EXPECT_TRUE(std::isfinite(worst));
        if (level > 0) EXPECT_LE(worst, 1.1 * prev);
        prev = worst;
    }
}

TEST(Forcing, DiracAtNode)
{
    const auto sp = make_space(4);
    const Point z(0.375, 0.5); // edge midpoint of the n = 4 grid
    const Index n = node_at(*sp, z);
    ASSERT_GE(n, 0);
    const Vector f = assemble_forcing(*sp, DiracForce{z, Eigen::Vector2d(1.0, 0.0)});
    for (Index i = 0; i < f.size(); ++i) EXPECT_NEAR(f(i), i == sp->velocity_dof(n, 0) ? 1.0 : 0.0, 1e-14);
    EXPECT_EQ(assemble_forcing(*sp, DiracForce{z, Eigen::Vector2d::Zero()}).norm(), 0.0);
    EXPECT_TRUE(is_zero_forcing(DiracForce{z, Eigen::Vector2d::Zero()}));
}

TEST(Forcing, DiracLinearInF)
{
    const auto sp = make_space(4);
    const Point z(0.31, 0.47);
    const Vector a = assemble_forcing(*sp, DiracForce{z, Eigen::Vector2d(1.0, 0.0)});
    const Vector b = assemble_forcing(*sp, DiracForce{z, Eigen::Vector2d(0.0, 1.0)});
    const Vector c = assemble_forcing(*sp, DiracForce{z, Eigen::Vector2d(2.0, -3.0)});
    EXPECT_LT((c - 2.0 * a + 3.0 * b).norm(), 1e-14);
    // pairing with a P2 field equals its point value
    const auto u = [](const Point& x) { return Eigen::Vector2d(x.x() * x.y(), 1 - x.x() * x.x()); };
    const FEField v = interpolate(sp, u, nullptr, false);
    EXPECT_NEAR(c.dot(v.velocity), Eigen::Vector2d(2.0, -3.0).dot(u(z)), 1e-13);
}

TEST(Forcing, DiracOutsideOrOnBoundary)
{
    const auto sp = make_space(4);
    EXPECT_THROW(assemble_forcing(*sp, DiracForce{Point(1.2, 0.5), Eigen::Vector2d(1, 0)}), OutsideDomain);
    EXPECT_THROW(assemble_forcing(*sp, DiracForce{Point(1.0, 0.5), Eigen::Vector2d(1, 0)}), OutsideDomain);
}

TEST(Forcing, AnalyticConstantAgainstInterpolant)
{
    // Pairing f = (1, 0) with the P2 interpolant of g = x(1-x)y(1-y). On each cell the vertex basis
    // functions integrate to 0 and the edge ones to |T|/3, so the pairing is sum |T|/3 g(midpoints).
    // It converges to int g = 1/36.
    const auto g = [](const Point& x) { return x.x() * (1 - x.x()) * x.y() * (1 - x.y()); };
    double prev_err = 1.0;
    for (int n : {2, 4, 8, 16, 32}) {
        const auto sp = make_space(n);
        const Vector f = assemble_forcing(*sp, AnalyticForce{[](const Point&) { return Eigen::Vector2d(1, 0); }, "unit_x"});
        const FEField v = interpolate(sp, [&](const Point& x) { return Eigen::Vector2d(g(x), 0.0); }, nullptr, true);
        double oracle = 0.0;
        const TriMesh& m = sp->mesh();
        for (Index c = 0; c < m.num_cells(); ++c) {
            const auto vs = m.vertices(c);
            for (int k = 0; k < 3; ++k) oracle += m.signed_area(c) / 3.0 * g(0.5 * (vs[k] + vs[(k + 1) % 3]));
        }
        const double pairing = f.dot(v.velocity);
        EXPECT_NEAR(pairing, oracle, 1e-12);
        const double err = std::abs(pairing - 1.0 / 36.0);
        EXPECT_LT(err, prev_err);
        prev_err = err;
    }
    EXPECT_LT(prev_err, 1e-6);
}

TEST(Forcing, CurveLineIntegral)
{
    const auto sp = make_space(4);
    const std::vector<Point> poly{Point(0.1, 0.2), Point(0.8, 0.7), Point(0.6, 0.3)};
    const Eigen::Vector2d dens(1.0, 2.0);
    CurveForce cf{poly, [dens](double) { return dens; }, "constant:[1,2]"};
    const Vector f = assemble_forcing(*sp, cf);
    // linear test field: Gauss on each piece is exact
    const FEField v = interpolate(sp, [](const Point& x) { return Eigen::Vector2d(x.x(), x.y()); }, nullptr, false);
    double exact = 0.0;
    for (std::size_t s = 0; s + 1 < poly.size(); ++s) {
        const Point mid = 0.5 * (poly[s] + poly[s + 1]);
        exact += (poly[s + 1] - poly[s]).norm() * (dens.x() * mid.x() + dens.y() * mid.y());
    }
    EXPECT_NEAR(f.dot(v.velocity), exact, 1e-13);
}

TEST(Forcing, CurveAlongMeshEdgesCountedOnce)
{
    const auto sp = make_space(4);
    // runs along the grid line y = 0.5 and through vertices
    CurveForce cf{{Point(0.25, 0.5), Point(0.75, 0.5)}, [](double) { return Eigen::Vector2d(1.0, 0.0); },
                  "constant:[1,0]"};
    const Vector f = assemble_forcing(*sp, cf);
    const FEField one = interpolate(sp, [](const Point&) { return Eigen::Vector2d(1.0, 0.0); }, nullptr, false);
    EXPECT_NEAR(f.dot(one.velocity), 0.5, 1e-13);
    // and along a cell diagonal
    CurveForce diag{{Point(0.25, 0.25), Point(0.75, 0.75)}, [](double) { return Eigen::Vector2d(1.0, 0.0); },
                    "constant:[1,0]"};
    EXPECT_NEAR(assemble_forcing(*sp, diag).dot(one.velocity), std::sqrt(0.5), 1e-13);
}

TEST(Forcing, CurveOutsideRejected)
{
    const auto sp = make_space(4);
    CurveForce cf{{Point(0.5, 0.5), Point(1.5, 0.5)}, [](double) { return Eigen::Vector2d(1.0, 0.0); }, "c"};
    EXPECT_THROW(assemble_forcing(*sp, cf), OutsideDomain);
    CurveForce onb{{Point(0.0, 0.2), Point(0.5, 0.5)}, [](double) { return Eigen::Vector2d(1.0, 0.0); }, "c"};
    EXPECT_THROW(assemble_forcing(*sp, onb), OutsideDomain);
}

TEST(Forcing, Describe)
{
    EXPECT_EQ(describe(AnalyticForce{nullptr, "gravity"}), "analytic(gravity)");
    EXPECT_NE(describe(DiracForce{Point(0.5, 0.5), Eigen::Vector2d(1, 0)}).find("dirac"), std::string::npos);
}
