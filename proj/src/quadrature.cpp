#include "wns/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace wns {

namespace {

/// Golub-Welsch for the Jacobi weight (1 - x)^a (1 + x)^b on [-1, 1].
Rule1D golub_welsch_jacobi(int n, double a, double b)
{
    WNS_REQUIRE(n >= 1, InvalidArgument, "quadrature needs at least one point");
    WNS_REQUIRE(a > -1.0 && b > -1.0, InvalidArgument, "Jacobi exponents must exceed -1");
    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub(std::max(n - 1, 0));
    const double ab = a + b;
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + ab;
        if (k == 0)
            diag(k) = (b - a) / (ab + 2.0);
        else
            diag(k) = (b * b - a * a) / (s * (s + 2.0));
    }
    for (int k = 1; k < n; ++k) {
        const double s = 2.0 * k + ab;
        double beta;
        if (k == 1)
            beta = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
        else
            beta = 4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
        sub(k - 1) = std::sqrt(beta);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                                std::lgamma(ab + 2.0));
    Rule1D r;
    r.x.resize(static_cast<std::size_t>(n));
    r.w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double v0 = eig.eigenvectors()(0, i);
        r.x[static_cast<std::size_t>(i)] = eig.eigenvalues()(i);
        r.w[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
    }
    return r;
}

} // namespace

Rule1D gauss_legendre(int n)
{
    Rule1D r = golub_welsch_jacobi(n, 0.0, 0.0);
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        r.x[i] = 0.5 * (r.x[i] + 1.0);
        r.w[i] *= 0.5;
    }
    return r;
}

Rule1D gauss_jacobi(int n, double beta)
{
    // (1 + x)^beta on [-1, 1] with u = (1 + x) / 2
    Rule1D r = golub_welsch_jacobi(n, 0.0, beta);
    const double scale = std::pow(2.0, -beta - 1.0);
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        r.x[i] = 0.5 * (r.x[i] + 1.0);
        r.w[i] *= scale;
    }
    return r;
}

const QuadratureRule& triangle_rule(int order)
{
    WNS_REQUIRE(order >= 0, InvalidArgument, "quadrature order must be non-negative");
    static std::mutex lock;
    static std::map<int, std::unique_ptr<QuadratureRule>> cache;
    std::lock_guard guard(lock);
    auto& slot = cache[order];
    if (!slot) {
        const int n = order / 2 + 1; // 2n - 1 >= order
        // x = u, y = (1 - u) v with Jacobian (1 - u); Jacobi weight (1 - u) via u -> 1 - u
        const Rule1D radial = gauss_jacobi(n, 1.0);
        const Rule1D line = gauss_legendre(n);
        auto rule = std::make_unique<QuadratureRule>();
        rule->order = order;
        for (std::size_t i = 0; i < radial.x.size(); ++i)
            for (std::size_t j = 0; j < line.x.size(); ++j) {
                const double u = 1.0 - radial.x[i];
                const double x = u;
                const double y = (1.0 - u) * line.x[j];
                rule->points.push_back({1.0 - x - y, x, y});
                rule->weights.push_back(2.0 * radial.w[i] * line.w[j]);
            }
        slot = std::move(rule);
    }
    return *slot;
}

std::vector<PhysicalPoint> radial_singular_rule(const Point& apex, const Point& a, const Point& b, double alpha,
                                                int degree, int angular_points)
{
    std::vector<PhysicalPoint> out;
    const Point ea = a - apex;
    const Point eb = b - a;
    const double det = cross(ea, eb);
    if (std::abs(det) <= 1e-300) return out;
    const Rule1D radial = gauss_jacobi(degree / 2 + 1, 1.0 + alpha);
    const Rule1D line = gauss_legendre(angular_points);
    out.reserve(radial.x.size() * line.x.size());
    for (std::size_t j = 0; j < line.x.size(); ++j) {
        const Point d = ea + line.x[j] * eb;
        const double ang = std::pow(d.norm(), alpha);
        for (std::size_t i = 0; i < radial.x.size(); ++i) {
            const double u = radial.x[i];
            out.push_back({apex + u * d, std::abs(det) * ang * line.w[j] * radial.w[i]});
        }
    }
    return out;
}

} // namespace wns
