#include "wns/weights.hpp"

#include "wns/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wns {

Weight Weight::constant(double c)
{
    WNS_REQUIRE(std::isfinite(c) && c > 0.0, InvalidArgument, "constant weight needs c > 0");
    return Weight(Kind::Constant, c, Point::Zero(), 0.0);
}

Weight Weight::radial(const Point& z, double alpha, double c)
{
    WNS_REQUIRE(z.allFinite(), InvalidArgument, "radial weight center is not finite");
    WNS_REQUIRE(std::isfinite(alpha) && alpha > -2.0 && alpha < 2.0, InvalidArgument,
                "radial weight exponent alpha must lie in (-2, 2) for A2 membership");
    WNS_REQUIRE(std::isfinite(c) && c > 0.0, InvalidArgument, "radial weight coefficient must be > 0");
    return Weight(Kind::RadialPower, c, z, alpha);
}

std::optional<Point> Weight::singular_point() const
{
    if (kind_ == Kind::RadialPower && alpha_ != 0.0) return z_;
    return std::nullopt;
}

double Weight::operator()(const Point& x) const
{
    if (kind_ == Kind::Constant || alpha_ == 0.0) return c_;
    const double r = (x - z_).norm();
    if (r == 0.0) {
        WNS_REQUIRE(alpha_ > 0.0, SingularPoint, "radial weight with negative exponent evaluated at its center");
        return 0.0;
    }
    return c_ * std::pow(r, alpha_);
}

Weight Weight::inverse() const
{
    return Weight(kind_, 1.0 / c_, z_, -alpha_);
}

Weight Weight::scaled(double s) const
{
    WNS_REQUIRE(std::isfinite(s) && s > 0.0, InvalidArgument, "weight scale must be > 0");
    return Weight(kind_, c_ * s, z_, alpha_);
}

std::string Weight::describe() const
{
    std::ostringstream os;
    os.precision(17);
    if (kind_ == Kind::Constant)
        os << "constant(c=" << c_ << ")";
    else
        os << "radial(z=(" << z_.x() << "," << z_.y() << "),alpha=" << alpha_ << ",c=" << c_ << ")";
    return os.str();
}

WeightClassReport classify(const Weight& w, const Polygon& domain)
{
    WeightClassReport r;
    if (w.kind() == Weight::Kind::Constant) {
        r.in_A2 = r.in_A1 = r.inverse_in_A1 = r.in_A2_of_domain = true;
        Point centroid = Point::Zero();
        for (const auto& v : domain.vertices()) centroid += v;
        centroid /= static_cast<double>(domain.size());
        r.epsilon_buffer = 0.5 * domain.signed_boundary_distance(centroid);
        r.lower_bound_on_collar = w.coefficient();
        return r;
    }
    const double a = w.alpha();
    r.in_A2 = a > -2.0 && a < 2.0;
    r.in_A1 = a > -2.0 && a <= 0.0;
    r.inverse_in_A1 = a >= 0.0 && a < 2.0;
    const double d = domain.signed_boundary_distance(w.center());
    if (!(d > 0.0)) {
        r.in_A2_of_domain = false;
        r.diagnostic = "singular point is not strictly inside the domain (distance to boundary " + std::to_string(d) +
                       "); no collar avoids it";
        return r;
    }
    r.epsilon_buffer = 0.5 * d;
    // The closed collar {dist(x, boundary) <= eps} is at distance d - eps = eps from z, and its
    // farthest point from z is a polygon vertex.
    double rmax = 0.0;
    for (const auto& v : domain.vertices()) rmax = std::max(rmax, (v - w.center()).norm());
    const double rmin = d - r.epsilon_buffer;
    r.lower_bound_on_collar = w.coefficient() * (a >= 0.0 ? std::pow(rmin, a) : std::pow(rmax, a));
    r.in_A2_of_domain = r.in_A2 && r.lower_bound_on_collar > 0.0;
    return r;
}

namespace {

double box_distance(const Point& z, const Point& lo, const Point& hi)
{
    const Point q = z.cwiseMax(lo).cwiseMin(hi);
    return (q - z).norm();
}

double tensor_gauss(const Weight& w, const Point& lo, const Point& hi, int n)
{
    static const Rule1D r8 = gauss_legendre(8);
    static const Rule1D r16 = gauss_legendre(16);
    const Rule1D& r = n <= 8 ? r8 : r16;
    const Point ext = hi - lo;
    double s = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i)
        for (std::size_t j = 0; j < r.x.size(); ++j)
            s += r.w[i] * r.w[j] * w(Point(lo.x() + r.x[i] * ext.x(), lo.y() + r.x[j] * ext.y()));
    return s * ext.x() * ext.y();
}

double singular_leaf(const Weight& w, const Point& lo, const Point& hi)
{
    const Point& z = w.center();
    const std::array<Point, 4> corners{lo, Point(hi.x(), lo.y()), hi, Point(lo.x(), hi.y())};
    double s = 0.0;
    for (int k = 0; k < 4; ++k)
        for (const auto& p : radial_singular_rule(z, corners[k], corners[(k + 1) % 4], w.alpha(), 0))
            s += p.w;
    return w.coefficient() * s;
}

double integrate_box_rec(const Weight& w, const Point& lo, const Point& hi, int depth)
{
    const Point& z = w.center();
    const double size = (hi - lo).maxCoeff();
    const double dist = box_distance(z, lo, hi);
    if (dist >= size) return tensor_gauss(w, lo, hi, 8);
    if (depth >= 20) {
        if (dist == 0.0) return singular_leaf(w, lo, hi);
        return tensor_gauss(w, lo, hi, 16);
    }
    const Point mid = 0.5 * (lo + hi);
    return integrate_box_rec(w, lo, mid, depth + 1) + integrate_box_rec(w, Point(mid.x(), lo.y()), Point(hi.x(), mid.y()), depth + 1) +
           integrate_box_rec(w, Point(lo.x(), mid.y()), Point(mid.x(), hi.y()), depth + 1) +
           integrate_box_rec(w, mid, hi, depth + 1);
}

/// Separating-axis test between a box and a convex polygon (closed sets).
bool box_meets_polygon(const Point& lo, const Point& hi, const Polygon& poly)
{
    const Point plo = poly.bbox_min();
    const Point phi = poly.bbox_max();
    if (hi.x() < plo.x() || lo.x() > phi.x() || hi.y() < plo.y() || lo.y() > phi.y()) return false;
    const auto& v = poly.vertices();
    const std::array<Point, 4> corners{lo, Point(hi.x(), lo.y()), hi, Point(lo.x(), hi.y())};
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point e = v[(i + 1) % v.size()] - v[i];
        bool all_outside = true;
        for (const auto& c : corners)
            if (cross(e, c - v[i]) >= -1e-14 * e.norm()) {
                all_outside = false;
                break;
            }
        if (all_outside) return false;
    }
    return true;
}

} // namespace

double integrate_over_box(const Weight& w, const Point& lo, const Point& hi)
{
    const Point ext = hi - lo;
    if (ext.x() <= 0.0 || ext.y() <= 0.0) return 0.0;
    if (!w.singular_point()) return w.coefficient() * ext.x() * ext.y();
    return integrate_box_rec(w, lo, hi, 0);
}

double a2_constant_estimate(const Weight& w, const Polygon& domain, int depth)
{
    WNS_REQUIRE(depth >= 1, InvalidArgument, "A2 scan depth must be >= 1");
    const Point lo = domain.bbox_min();
    const Point hi = domain.bbox_max();
    const double side = (hi - lo).maxCoeff();
    const Weight inv = w.inverse();
    double best = 0.0;
    for (int level = 0; level <= depth; ++level) {
        const int m = 1 << level;
        const double s = side / m;
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) {
                const Point qlo = Point(lo.x() + i * s, lo.y() + j * s);
                const Point qhi = (qlo + Point(s, s)).cwiseMin(hi);
                if (qhi.x() <= qlo.x() || qhi.y() <= qlo.y()) continue;
                if (!box_meets_polygon(qlo, qhi, domain)) continue;
                const double area = (qhi - qlo).prod();
                const double mean_w = integrate_over_box(w, qlo, qhi) / area;
                const double mean_inv = integrate_over_box(inv, qlo, qhi) / area;
                best = std::max(best, mean_w * mean_inv);
            }
    }
    return best;
}

} // namespace wns
