#include "wns/femspace.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace wns;

namespace {

constexpr double kDistPow15 = 0.2495503034367758; // int_[0,1]^2 |x - (1/2,1/2)|^1.5

std::shared_ptr<const TaylorHoodSpace> make_space(int n, int refinements = 0)
{
    TriMesh m = generate_uniform(Polygon::unit_square(), n);
    for (int i = 0; i < refinements; ++i) m = uniform_refine(m);
    return std::make_shared<const TaylorHoodSpace>(build_space(std::make_shared<const TriMesh>(std::move(m))));
}

FEField random_field(const std::shared_ptr<const TaylorHoodSpace>& sp, std::mt19937_64& rng)
{
    std::normal_distribution<double> N(0.0, 1.0);
    FEField f = FEField::zero(sp);
    for (Index i = 0; i < f.velocity.size(); ++i) f.velocity(i) = N(rng);
    for (Index i = 0; i < f.pressure.size(); ++i) f.pressure(i) = N(rng);
    sp->apply_mask(f.velocity);
    return f;
}

// golden-section minimization of a unimodal function on [a, b]
double golden_min(const std::function<double(double)>& f, double a, double b)
{
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    for (int i = 0; i < 200; ++i) {
        if (f(c) < f(d))
            b = d;
        else
            a = c;
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    return f(0.5 * (a + b));
}

} // namespace

TEST(Space, DofCounts)
{
    const auto sp = make_space(1);
    EXPECT_EQ(sp->num_edges(), 5);
    EXPECT_EQ(sp->num_nodes(), 9);
    EXPECT_EQ(sp->num_velocity_dofs(), 18);
    EXPECT_EQ(sp->num_pressure_dofs(), 4);
    // 8 boundary nodes per component, only the diagonal midpoint is free
    int masked = 0;
    for (bool b : sp->dirichlet_mask()) masked += b;
    EXPECT_EQ(masked, 16);
    EXPECT_EQ(sp->num_free_velocity_dofs(), 2);

    const auto sp2 = make_space(1, 1);
    const Index V = sp2->mesh().num_points();
    EXPECT_EQ(sp2->num_velocity_dofs(), 2 * (V + sp2->num_edges()));
    EXPECT_EQ(V - sp2->num_edges() + sp2->mesh().num_cells(), 1); // Euler
}

TEST(Space, MaskCoversBoundaryNodes)
{
    const auto sp = make_space(4);
    const Polygon sq = Polygon::unit_square();
    for (Index n = 0; n < sp->num_nodes(); ++n) {
        const bool on_boundary = std::abs(sq.signed_boundary_distance(sp->node_points()[n])) < 1e-14;
        EXPECT_EQ(sp->dirichlet_mask()[sp->velocity_dof(n, 0)], on_boundary);
        EXPECT_EQ(sp->dirichlet_mask()[sp->velocity_dof(n, 1)], on_boundary);
    }
}

TEST(Space, FreeRestrictExtend)
{
    const auto sp = make_space(3);
    std::mt19937_64 rng(1);
    const FEField f = random_field(sp, rng);
    EXPECT_EQ((sp->extend_free(sp->restrict_free(f.velocity)) - f.velocity).norm(), 0.0);
}

TEST(EvalField, ZeroLinearAndPressure)
{
    const auto sp = make_space(3);
    const FEField z = FEField::zero(sp);
    const auto v0 = eval_field(z, Point(0.3, 0.4));
    EXPECT_EQ(v0.velocity.norm() + v0.gradient.norm() + std::abs(v0.pressure), 0.0);

    const FEField lin = interpolate(
        sp, [](const Point& x) { return Eigen::Vector2d(x.x(), 0.0); }, [](const Point& x) { return x.x() + x.y(); },
        false);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const auto v = eval_field(lin, Point(U(rng), U(rng)));
        EXPECT_NEAR(v.gradient(0, 0), 1.0, 1e-12);
        EXPECT_NEAR(std::abs(v.gradient(0, 1)) + v.gradient.row(1).norm(), 0.0, 1e-12);
    }
    EXPECT_NEAR(eval_field(lin, Point(0.25, 0.25)).pressure, 0.5, 1e-15);
    EXPECT_THROW(eval_field(lin, Point(1.5, 0.5)), OutsideDomain);
}

TEST(Interpolate, ReproducesP2AndP1)
{
    const auto sp = make_space(2, 1);
    auto u = [](const Point& x) {
        return Eigen::Vector2d(1 + 2 * x.x() - x.y() + 3 * x.x() * x.y() - x.y() * x.y(), x.x() * x.x() - 0.5 * x.y());
    };
    auto gu = [](const Point& x) {
        Eigen::Matrix2d g;
        g << 2 + 3 * x.y(), -1 + 3 * x.x() - 2 * x.y(), 2 * x.x(), -0.5;
        return g;
    };
    auto p = [](const Point& x) { return 0.3 - x.x() + 2 * x.y(); };
    const FEField f = interpolate(sp, u, p, false);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const Point x(U(rng), U(rng));
        const auto v = eval_field(f, x);
        EXPECT_LT((v.velocity - u(x)).norm(), 1e-12);
        EXPECT_LT((v.gradient - gu(x)).norm(), 1e-11);
        EXPECT_NEAR(v.pressure, p(x), 1e-12);
    }
    const FEField zero = interpolate(sp, nullptr, nullptr);
    EXPECT_EQ(zero.velocity.norm() + zero.pressure.norm(), 0.0);
    // masked interpolation zeroes boundary dofs exactly
    const FEField masked = interpolate(sp, u, p, true);
    for (Index i = 0; i < masked.velocity.size(); ++i)
        if (sp->dirichlet_mask()[i]) EXPECT_EQ(masked.velocity(i), 0.0);
}

TEST(Transfer, NestedIsExact)
{
    const auto coarse = make_space(2);
    const auto fine = make_space(2, 1);
    std::mt19937_64 rng(8);
    const FEField f = random_field(coarse, rng);
    const FEField g = transfer(f, fine);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const Point x(U(rng), U(rng));
        const auto a = eval_field(f, x), b = eval_field(g, x);
        EXPECT_LT((a.velocity - b.velocity).norm(), 1e-12);
        EXPECT_NEAR(a.pressure, b.pressure, 1e-12);
    }
}

TEST(Norms, TrivialValues)
{
    const auto sp = make_space(4);
    const TriMesh& m = sp->mesh();
    CellScalar one = [](Index, const std::array<double, 3>&, const Point&) { return 1.0; };
    CellScalar zero = [](Index, const std::array<double, 3>&, const Point&) { return 0.0; };
    EXPECT_EQ(norm_L2w(m, zero, Weight::constant(1.0)), 0.0);
    EXPECT_NEAR(norm_L2w(m, one, Weight::constant(1.0)), 1.0, 1e-14);
    EXPECT_NEAR(norm_L4w(m, one, Weight::constant(1.0)), 1.0, 1e-14);
}

TEST(Norms, SingularWeightFrozenIntegral)
{
    CellScalar one = [](Index, const std::array<double, 3>&, const Point&) { return 1.0; };
    const Weight w = Weight::radial(Point(0.5, 0.5), 1.5);
    for (int n : {2, 4, 8, 16}) {
        const auto sp = make_space(n);
        const double v = norm_L2w(sp->mesh(), one, w);
        EXPECT_NEAR(v * v, kDistPow15, 1e-6 * kDistPow15) << n;
    }
    // singular point off the mesh vertices
    const Weight w2 = Weight::radial(Point(0.5 + 1.0 / 24, 0.5 - 1.0 / 40), 1.5);
    const double ref = integrate_over_box(w2, Point(0, 0), Point(1, 1));
    const double v = norm_L2w(make_space(4)->mesh(), one, w2);
    EXPECT_NEAR(v * v, ref, 1e-6 * ref);
}

TEST(Norms, NegativeAlphaIntegral)
{
    CellScalar one = [](Index, const std::array<double, 3>&, const Point&) { return 1.0; };
    const Weight w = Weight::radial(Point(0.37, 0.61), -1.0);
    const double ref = integrate_over_box(w, Point(0, 0), Point(1, 1));
    const double v = norm_L2w(make_space(6)->mesh(), one, w);
    EXPECT_NEAR(v * v, ref, 1e-6 * ref);
}

TEST(Norms, ConstantWeightMatchesClosedFormMass)
{
    // Unweighted L2 norm of a P2 velocity component via the closed-form P2 mass matrix.
    const auto sp = make_space(3);
    std::mt19937_64 rng(11);
    const FEField f = random_field(sp, rng);
    Eigen::Matrix<double, 6, 6> M;
    M << 6, -1, -1, 0, -4, 0, -1, 6, -1, 0, 0, -4, -1, -1, 6, -4, 0, 0, 0, 0, -4, 32, 16, 16, -4, 0, 0, 16, 32, 16, 0,
        -4, 0, 16, 16, 32;
    M /= 180.0;
    // rows/cols v0, v1, v2, e01, e12, e20 (vertex i couples to the edge opposite it)
    double s = 0.0;
    for (Index c = 0; c < sp->mesh().num_cells(); ++c) {
        const auto& nodes = sp->cell_nodes(c);
        for (int comp = 0; comp < 2; ++comp)
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j)
                    s += sp->mesh().signed_area(c) * M(i, j) * f.velocity(sp->velocity_dof(nodes[i], comp)) *
                         f.velocity(sp->velocity_dof(nodes[j], comp));
    }
    const double lib = norm_L2w(sp->mesh(), velocity_magnitude(f), Weight::constant(1.0));
    EXPECT_NEAR(lib * lib, s, 1e-10 * s);
}

TEST(QuotientNorm, Examples)
{
    const auto sp = make_space(4);
    const TriMesh& m = sp->mesh();
    CellScalar konst = [](Index, const std::array<double, 3>&, const Point&) { return 3.7; };
    EXPECT_NEAR(quotient_pressure_norm(m, konst, Weight::constant(1.0)), 0.0, 1e-12);
    EXPECT_NEAR(quotient_pressure_norm(m, konst, Weight::radial(Point(0.5, 0.5), 1.5)), 0.0, 1e-12);
    CellScalar xm = [](Index, const std::array<double, 3>&, const Point& x) { return x.x() - 0.5; };
    EXPECT_NEAR(quotient_pressure_norm(m, xm, Weight::constant(1.0)), 1.0 / std::sqrt(12.0), 1e-13);
}

TEST(QuotientNorm, GoldenSectionOracle)
{
    const auto sp = make_space(4);
    const TriMesh& m = sp->mesh();
    for (const Weight& w : {Weight::radial(Point(0.3, 0.6), 1.5), Weight::radial(Point(0.5, 0.5), -1.0)}) {
        CellScalar px = [](Index, const std::array<double, 3>&, const Point& x) { return x.x(); };
        const double q = quotient_pressure_norm(m, px, w);
        const double best = golden_min(
            [&](double c) {
                CellScalar d = [c](Index, const std::array<double, 3>&, const Point& x) { return x.x() - c; };
                return norm_L2w(m, d, w);
            },
            -1.0, 2.0);
        EXPECT_NEAR(q, best, 1e-9);
    }
}

TEST(WeightedNorms, MatricesMatchQuadratureNorms)
{
    const auto sp = make_space(4);
    std::mt19937_64 rng(17);
    const FEField f = random_field(sp, rng);
    for (const Weight& w : {Weight::constant(2.0), Weight::radial(Point(0.5, 0.5), 1.5),
                            Weight::radial(Point(0.41, 0.52), -1.0)}) {
        const WeightedNorms wn(sp, w);
        EXPECT_NEAR(wn.h1_seminorm(f.velocity), seminorm_H1w(f, w), 1e-10 * seminorm_H1w(f, w));
        EXPECT_NEAR(wn.pressure_quotient(f.pressure), quotient_pressure_norm(f, w), 1e-10);
        // symmetric Gram matrices
        EXPECT_LT((SparseMatrix(wn.stiffness().transpose()) - wn.stiffness()).norm(), 1e-12 * wn.stiffness().norm());
        EXPECT_LT((SparseMatrix(wn.pressure_mass().transpose()) - wn.pressure_mass()).norm(), 1e-14);
    }
}

TEST(WeightedNorms, DualNormOfRieszIsSeminorm)
{
    const auto sp = make_space(4);
    std::mt19937_64 rng(19);
    const FEField f = random_field(sp, rng);
    const WeightedNorms wn(sp, Weight::radial(Point(0.5, 0.5), 1.5));
    const Vector l = wn.stiffness() * f.velocity;
    EXPECT_NEAR(wn.dual_norm(l), wn.h1_seminorm(f.velocity), 1e-9 * wn.h1_seminorm(f.velocity));
    EXPECT_LT((wn.riesz(l) - f.velocity).norm(), 1e-8 * f.velocity.norm());
}

TEST(Norms, CauchySchwarzPressureDivergence)
{
    const auto sp = make_space(4);
    std::mt19937_64 rng(23);
    for (const Weight& w : {Weight::constant(1.0), Weight::radial(Point(0.5, 0.5), 1.5),
                            Weight::radial(Point(0.5, 0.5), -1.0)}) {
        for (int trial = 0; trial < 10; ++trial) {
            const FEField f = random_field(sp, rng);
            const TriMesh& m = sp->mesh();
            const auto& rule = triangle_rule(4);
            double pairing = 0.0;
            for (Index c = 0; c < m.num_cells(); ++c)
                for (std::size_t q = 0; q < rule.points.size(); ++q) {
                    const auto v = eval_in_cell(f, c, rule.points[q]);
                    pairing += m.signed_area(c) * rule.weights[q] * v.pressure * v.gradient.trace();
                }
            CellScalar p = pressure_value(f);
            CellScalar divv = [&f](Index c, const std::array<double, 3>& b, const Point&) {
                return eval_in_cell(f, c, b).gradient.trace();
            };
            const double bound = norm_L2w(m, p, w) * norm_L2w(m, divv, w.inverse());
            EXPECT_LE(std::abs(pairing), bound * (1 + 1e-8));
        }
    }
}

TEST(Norms, DiscreteEmbeddingRatioBounded)
{
    std::mt19937_64 rng(29);
    const Weight w = Weight::radial(Point(0.5, 0.5), 1.5);
    double prev = 0.0;
    for (int level = 0; level < 3; ++level) {
        const auto sp = make_space(4, level);
        double worst = 0.0;
        for (int t = 0; t < 10; ++t) {
            const FEField f = random_field(sp, rng);
            worst = std::max(worst, velocity_L4w(f, w) / seminorm_H1w(f, w));
        }
        EXPECT_TRUE(std::isfinite(worst));
        if (level > 0) {
            EXPECT_LE(worst, 2.0 * prev); // random fields: only boundedness, not sharpness
        }
        prev = worst;
    }
}
