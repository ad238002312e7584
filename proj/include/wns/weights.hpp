#ifndef WNS_WEIGHTS_HPP
#define WNS_WEIGHTS_HPP

#include "wns/common.hpp"
#include "wns/mesh.hpp"

#include <optional>
#include <string>

namespace wns {

/// Muckenhoupt weight: either a positive constant or  c |x - z|^alpha  with alpha in (-2, 2),
/// which is exactly the A2 range of a radial power in the plane.
class Weight {
public:
    enum class Kind { Constant, RadialPower };

    static Weight constant(double c = 1.0);
    static Weight radial(const Point& z, double alpha, double c = 1.0);

    Kind kind() const { return kind_; }
    double coefficient() const { return c_; }
    const Point& center() const { return z_; }
    double alpha() const { return alpha_; }

    /// The point where the weight is singular or non-smooth, if any.
    std::optional<Point> singular_point() const;

    /// Throws SingularPoint when evaluated at z with alpha < 0.
    double operator()(const Point& x) const;

    /// Pointwise reciprocal: 1/c for constants, c^-1 |x - z|^-alpha for radial powers.
    Weight inverse() const;
    /// The weight multiplied by s > 0.
    Weight scaled(double s) const;

    std::string describe() const;

private:
    Weight(Kind kind, double c, const Point& z, double alpha) : kind_(kind), c_(c), z_(z), alpha_(alpha) {}

    Kind kind_;
    double c_;
    Point z_;
    double alpha_;
};

struct WeightClassReport {
    bool in_A2 = false;
    bool in_A1 = false;
    bool inverse_in_A1 = false;
    bool in_A2_of_domain = false;
    double epsilon_buffer = 0.0;       ///< width of the boundary collar
    double lower_bound_on_collar = 0.0; ///< min of the weight over the closed collar
    std::string diagnostic;
};

/// Analytic classification. For radial powers the collar width is dist(z, boundary)/2.
WeightClassReport classify(const Weight& w, const Polygon& domain);

/// Integral of the weight over the axis-aligned box [lo, hi]. Boxes near the singular point are
/// subdivided 4-way (depth cap 20); a leaf still containing the point is integrated by a
/// radial Gauss-Jacobi rule, all others by tensor Gauss-Legendre.
double integrate_over_box(const Weight& w, const Point& lo, const Point& hi);

/// Max over dyadic squares of levels 0..depth of mean(w) mean(1/w). Level-0 square is anchored
/// at the domain's bounding-box corner with side equal to the larger box extent; squares are
/// clipped to the bounding box and kept when they meet the polygon.
double a2_constant_estimate(const Weight& w, const Polygon& domain, int depth);

} // namespace wns

#endif
