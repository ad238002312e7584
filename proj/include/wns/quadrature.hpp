#ifndef WNS_QUADRATURE_HPP
#define WNS_QUADRATURE_HPP

#include "wns/common.hpp"

#include <array>
#include <vector>

namespace wns {

/// One-dimensional rule on [0, 1].
struct Rule1D {
    std::vector<double> x;
    std::vector<double> w;
};

/// n-point Gauss-Legendre rule on [0, 1]; weights sum to 1.
Rule1D gauss_legendre(int n);

/// n-point Gauss-Jacobi rule on [0, 1] for the weight u^beta (beta > -1); weights sum to
/// 1 / (1 + beta). Exact for polynomials of degree 2n - 1 against u^beta.
Rule1D gauss_jacobi(int n, double beta);

/// Rule on the reference triangle in barycentric coordinates. Weights are normalized to the
/// reference area, so the integral over a physical triangle T is |T| * sum_i w_i f(x_i).
struct QuadratureRule {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    int order = 0;
};

/// Collapsed (conical product) Gauss rule exact for total degree `order`.
/// Rules are cached; the returned reference stays valid for the program lifetime.
const QuadratureRule& triangle_rule(int order);

/// Physical quadrature point with an integration weight that already includes the Jacobian.
struct PhysicalPoint {
    Point x;
    double w = 0.0;
};

/// Rule for  integral over triangle (apex, a, b) of g(x) |x - apex|^alpha  where g is a polynomial
/// of total degree `degree`. Collapses the triangle onto the apex so the radial factor is
/// integrated by Gauss-Jacobi; the angular direction uses `angular_points` Gauss-Legendre nodes.
/// The |x - apex|^alpha factor is folded into the returned weights. Degenerate triangles yield an
/// empty rule.
std::vector<PhysicalPoint> radial_singular_rule(const Point& apex, const Point& a, const Point& b, double alpha,
                                                int degree, int angular_points = 16);

} // namespace wns

#endif
