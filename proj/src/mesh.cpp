#include "wns/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace wns {

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed)
{
    auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---------------------------------------------------------------------------------------------
// Polygon

Polygon::Polygon(std::vector<Point> vertices) : vertices_(std::move(vertices))
{
    const std::size_t n = vertices_.size();
    WNS_REQUIRE(n >= 3, InvalidArgument, "polygon needs at least 3 vertices");
    for (const auto& v : vertices_)
        WNS_REQUIRE(v.allFinite(), InvalidArgument, "polygon vertex is not finite");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            WNS_REQUIRE((vertices_[i] - vertices_[j]).norm() > 0.0, InvalidArgument,
                        "polygon has repeated vertex " + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
        const Point e0 = vertices_[(i + 1) % n] - vertices_[i];
        const Point e1 = vertices_[(i + 2) % n] - vertices_[(i + 1) % n];
        const double scale = e0.norm() * e1.norm();
        WNS_REQUIRE(cross(e0, e1) > 1e-14 * scale, InvalidArgument,
                    "polygon is not strictly convex and counterclockwise at vertex " +
                        std::to_string((i + 1) % n));
    }
}

Polygon Polygon::unit_square()
{
    return Polygon({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)});
}

double Polygon::area() const
{
    double a = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
        a += cross(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
    return 0.5 * a;
}

double Polygon::diameter() const
{
    double d = 0.0;
    for (const auto& a : vertices_)
        for (const auto& b : vertices_) d = std::max(d, (a - b).norm());
    return d;
}

double Polygon::signed_boundary_distance(const Point& x) const
{
    // Convex: inside iff on the left of every edge; the distance to the boundary is then the
    // minimum over edge segments.
    bool inside = true;
    double dmin = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = vertices_[i];
        const Point& b = vertices_[(i + 1) % n];
        const Point e = b - a;
        if (cross(e, x - a) < 0.0) inside = false;
        const double t = std::clamp((x - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
        dmin = std::min(dmin, (a + t * e - x).norm());
    }
    return inside ? dmin : -dmin;
}

bool Polygon::contains(const Point& x, double tol) const
{
    return signed_boundary_distance(x) >= -tol;
}

int Polygon::edge_containing(const Point& x, double tol) const
{
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = vertices_[i];
        const Point& b = vertices_[(i + 1) % n];
        const Point e = b - a;
        const double t = (x - a).dot(e) / e.squaredNorm();
        if (t < -tol || t > 1.0 + tol) continue;
        if (std::abs(cross(e, x - a)) / e.norm() <= tol) return static_cast<int>(i);
    }
    return -1;
}

Point Polygon::bbox_min() const
{
    Point lo = vertices_.front();
    for (const auto& v : vertices_) lo = lo.cwiseMin(v);
    return lo;
}

Point Polygon::bbox_max() const
{
    Point hi = vertices_.front();
    for (const auto& v : vertices_) hi = hi.cwiseMax(v);
    return hi;
}

// ---------------------------------------------------------------------------------------------
// TriMesh

TriMesh::TriMesh(std::vector<Point> points, std::vector<Cell> cells, std::vector<BoundaryEdge> boundary)
    : points_(std::move(points)), cells_(std::move(cells)), boundary_(std::move(boundary))
{
    WNS_REQUIRE(!cells_.empty(), InvalidArgument, "mesh has no cells");
    const Index np = num_points();
    for (const auto& c : cells_)
        for (Index v : c)
            WNS_REQUIRE(v >= 0 && v < np, InvalidArgument, "cell references a missing point");
    h_max_ = 0.0;
    h_min_ = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < num_cells(); ++c) {
        WNS_REQUIRE(signed_area(c) > 0.0, InvalidArgument,
                    "cell " + std::to_string(c) + " has non-positive signed area");
        const double d = diameter(c);
        h_max_ = std::max(h_max_, d);
        h_min_ = std::min(h_min_, d);
    }
    build_index();
}

double TriMesh::signed_area(Index c) const
{
    const auto [a, b, d] = vertices(c);
    return 0.5 * cross(b - a, d - a);
}

double TriMesh::diameter(Index c) const
{
    const auto [a, b, d] = vertices(c);
    return std::max({(a - b).norm(), (b - d).norm(), (d - a).norm()});
}

std::array<Point, 3> TriMesh::vertices(Index c) const
{
    const Cell& cell = cells_[static_cast<std::size_t>(c)];
    return {points_[static_cast<std::size_t>(cell[0])], points_[static_cast<std::size_t>(cell[1])],
            points_[static_cast<std::size_t>(cell[2])]};
}

Point TriMesh::map_to_physical(Index c, const std::array<double, 3>& bary) const
{
    const auto v = vertices(c);
    return bary[0] * v[0] + bary[1] * v[1] + bary[2] * v[2];
}

std::array<double, 3> TriMesh::barycentric(Index c, const Point& x) const
{
    const auto [a, b, d] = vertices(c);
    const double det = cross(b - a, d - a);
    const double l1 = cross(x - a, d - a) / det;
    const double l2 = cross(b - a, x - a) / det;
    return {1.0 - l1 - l2, l1, l2};
}

void TriMesh::build_index()
{
    lo_ = points_.front();
    Point hi = points_.front();
    for (const auto& p : points_) {
        lo_ = lo_.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Point ext = (hi - lo_).cwiseMax(Point::Constant(1e-300));
    const double target = std::max(1.0, std::sqrt(static_cast<double>(cells_.size()) / 2.0));
    const double aspect = ext.x() / ext.y();
    nx_ = std::max(1, static_cast<int>(std::ceil(target * std::sqrt(aspect))));
    ny_ = std::max(1, static_cast<int>(std::ceil(target / std::sqrt(aspect))));
    cell_size_ = Point(ext.x() / nx_, ext.y() / ny_);
    buckets_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), {});
    for (Index c = 0; c < num_cells(); ++c) {
        const auto v = vertices(c);
        const Point clo = v[0].cwiseMin(v[1]).cwiseMin(v[2]);
        const Point chi = v[0].cwiseMax(v[1]).cwiseMax(v[2]);
        const int i0 = std::clamp(static_cast<int>(std::floor((clo.x() - lo_.x()) / cell_size_.x())), 0, nx_ - 1);
        const int i1 = std::clamp(static_cast<int>(std::floor((chi.x() - lo_.x()) / cell_size_.x())), 0, nx_ - 1);
        const int j0 = std::clamp(static_cast<int>(std::floor((clo.y() - lo_.y()) / cell_size_.y())), 0, ny_ - 1);
        const int j1 = std::clamp(static_cast<int>(std::floor((chi.y() - lo_.y()) / cell_size_.y())), 0, ny_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(c);
    }
}

std::vector<Index> TriMesh::cells_near(const Point& lo, const Point& hi) const
{
    const double slack = 1e-12 * std::max(cell_size_.x(), cell_size_.y());
    const int i0 = std::clamp(static_cast<int>(std::floor((lo.x() - slack - lo_.x()) / cell_size_.x())), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>(std::floor((hi.x() + slack - lo_.x()) / cell_size_.x())), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>(std::floor((lo.y() - slack - lo_.y()) / cell_size_.y())), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>(std::floor((hi.y() + slack - lo_.y()) / cell_size_.y())), 0, ny_ - 1);
    std::vector<Index> out;
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
            const auto& b = buckets_[static_cast<std::size_t>(j) * nx_ + i];
            out.insert(out.end(), b.begin(), b.end());
        }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::optional<CellLocation> TriMesh::locate(const Point& x) const
{
    constexpr double tol = 1e-12;
    // cells_near returns sorted indices, so the first hit is the lowest containing cell
    for (Index c : cells_near(x, x)) {
        auto bary = barycentric(c, x);
        if (bary[0] >= -tol && bary[1] >= -tol && bary[2] >= -tol) {
            double s = 0.0;
            for (double& b : bary) {
                b = std::clamp(b, 0.0, 1.0);
                s += b;
            }
            for (double& b : bary) b /= s;
            return CellLocation{c, bary};
        }
    }
    return std::nullopt;
}

std::uint64_t TriMesh::checksum() const
{
    std::uint64_t h = fnv1a("tri-mesh v1");
    h = fnv1a(points_.data(), points_.size() * sizeof(Point), h);
    h = fnv1a(cells_.data(), cells_.size() * sizeof(Cell), h);
    return h;
}

// ---------------------------------------------------------------------------------------------
// Generation

namespace {

std::uint64_t edge_key(Index a, Index b)
{
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

/// Boundary edges are the edges owned by exactly one cell; each is tagged by the polygon edge it
/// lies on. Orientation follows the owning cell (counterclockwise).
std::vector<BoundaryEdge> extract_boundary(const std::vector<Point>& points, const std::vector<Cell>& cells,
                                           const Polygon& polygon)
{
    std::unordered_map<std::uint64_t, int> count;
    for (const auto& c : cells)
        for (int e = 0; e < 3; ++e) ++count[edge_key(c[e], c[(e + 1) % 3])];
    const double tol = 1e-10 * polygon.diameter();
    std::vector<BoundaryEdge> out;
    for (const auto& c : cells)
        for (int e = 0; e < 3; ++e) {
            const Index a = c[e];
            const Index b = c[(e + 1) % 3];
            if (count[edge_key(a, b)] != 1) continue;
            const Point mid = 0.5 * (points[static_cast<std::size_t>(a)] + points[static_cast<std::size_t>(b)]);
            out.push_back({a, b, polygon.edge_containing(mid, tol)});
        }
    return out;
}

/// Builds the lattice subdivision of a set of "macro" triangles, sharing lattice points on
/// common macro edges. `place` maps (macro index, i, j) with i + j <= n to a physical point.
template <class Place>
std::pair<std::vector<Point>, std::vector<Cell>> lattice_subdivide(const std::vector<std::array<Index, 3>>& macro,
                                                                   int n, Place place)
{
    std::map<std::vector<Index>, Index> ids;
    std::vector<Point> points;
    std::vector<Cell> cells;
    for (std::size_t t = 0; t < macro.size(); ++t) {
        const auto& m = macro[t];
        auto id = [&](int i, int j) {
            const int k = n - i - j;
            // key: (macro vertex, lattice count) for every nonzero barycentric component,
            // plus the macro index when the point is interior to the macro triangle
            std::vector<std::pair<Index, int>> parts;
            if (k > 0) parts.emplace_back(m[0], k);
            if (i > 0) parts.emplace_back(m[1], i);
            if (j > 0) parts.emplace_back(m[2], j);
            std::sort(parts.begin(), parts.end());
            std::vector<Index> key;
            for (auto [v, c] : parts) {
                key.push_back(v);
                key.push_back(c);
            }
            if (parts.size() == 3) key.push_back(-1 - static_cast<Index>(t));
            auto [it, fresh] = ids.try_emplace(key, static_cast<Index>(points.size()));
            if (fresh) points.push_back(place(t, i, j));
            return it->second;
        };
        for (int j = 0; j < n; ++j)
            for (int i = 0; i + j < n; ++i) {
                cells.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
                if (i + j + 1 < n) cells.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
            }
    }
    return {std::move(points), std::move(cells)};
}

} // namespace

TriMesh generate_uniform(const Polygon& polygon, int n)
{
    WNS_REQUIRE(n >= 1, InvalidArgument, "subdivision count must be >= 1");
    const auto& v = polygon.vertices();
    std::vector<std::array<Index, 3>> macro;
    for (std::size_t k = 1; k + 1 < v.size(); ++k)
        macro.push_back({0, static_cast<Index>(k), static_cast<Index>(k + 1)});
    auto [points, cells] = lattice_subdivide(macro, n, [&](std::size_t t, int i, int j) -> Point {
        const Point& a = v[static_cast<std::size_t>(macro[t][0])];
        const Point& b = v[static_cast<std::size_t>(macro[t][1])];
        const Point& c = v[static_cast<std::size_t>(macro[t][2])];
        if (i == 0 && j == 0) return a;
        if (i == n) return b;
        if (j == n) return c;
        return a + (static_cast<double>(i) / n) * (b - a) + (static_cast<double>(j) / n) * (c - a);
    });
    auto boundary = extract_boundary(points, cells, polygon);
    return TriMesh(std::move(points), std::move(cells), std::move(boundary));
}

TriMesh generate_graded(const Polygon& polygon, const GradingSpec& spec)
{
    WNS_REQUIRE(spec.mu > 0.0 && spec.mu <= 1.0, InvalidArgument, "grading exponent mu must lie in (0, 1]");
    WNS_REQUIRE(spec.base_n >= 1, InvalidArgument, "grading base_n must be >= 1");
    WNS_REQUIRE(spec.center.allFinite(), InvalidArgument, "grading center is not finite");
    WNS_REQUIRE(polygon.signed_boundary_distance(spec.center) > 1e-12 * polygon.diameter(), InvalidArgument,
                "grading center must lie strictly inside the polygon");
    const auto& v = polygon.vertices();
    const Index m = static_cast<Index>(v.size());
    // macro vertex m is the center
    std::vector<std::array<Index, 3>> macro;
    for (Index k = 0; k < m; ++k) macro.push_back({m, k, (k + 1) % m});
    const int n = spec.base_n;
    const double expo = 1.0 / spec.mu - 1.0;
    auto [points, cells] = lattice_subdivide(macro, n, [&](std::size_t t, int i, int j) -> Point {
        const Point& z = spec.center;
        const Point& b = v[static_cast<std::size_t>(macro[t][1])];
        const Point& c = v[static_cast<std::size_t>(macro[t][2])];
        if (i == 0 && j == 0) return z;
        if (i == n) return b;
        if (j == n) return c;
        const double s = static_cast<double>(i + j) / n;
        const double scale = std::pow(s, expo);
        return z + scale * ((static_cast<double>(i) / n) * (b - z) + (static_cast<double>(j) / n) * (c - z));
    });
    auto boundary = extract_boundary(points, cells, polygon);
    return TriMesh(std::move(points), std::move(cells), std::move(boundary));
}

TriMesh uniform_refine(const TriMesh& mesh)
{
    std::vector<Point> points = mesh.points();
    std::unordered_map<std::uint64_t, Index> mid;
    auto midpoint = [&](Index a, Index b) {
        auto [it, fresh] = mid.try_emplace(edge_key(a, b), static_cast<Index>(points.size()));
        if (fresh)
            points.push_back(0.5 * (mesh.points()[static_cast<std::size_t>(a)] +
                                    mesh.points()[static_cast<std::size_t>(b)]));
        return it->second;
    };
    std::vector<Cell> cells;
    cells.reserve(mesh.cells().size() * 4);
    for (const auto& c : mesh.cells()) {
        const Index m01 = midpoint(c[0], c[1]);
        const Index m12 = midpoint(c[1], c[2]);
        const Index m20 = midpoint(c[2], c[0]);
        cells.push_back({c[0], m01, m20});
        cells.push_back({m01, c[1], m12});
        cells.push_back({m20, m12, c[2]});
        cells.push_back({m01, m12, m20});
    }
    std::vector<BoundaryEdge> boundary;
    boundary.reserve(mesh.boundary_edges().size() * 2);
    for (const auto& e : mesh.boundary_edges()) {
        const Index m = midpoint(e.a, e.b);
        boundary.push_back({e.a, m, e.tag});
        boundary.push_back({m, e.b, e.tag});
    }
    return TriMesh(std::move(points), std::move(cells), std::move(boundary));
}

MeshAudit audit(const TriMesh& mesh, const Polygon& polygon)
{
    MeshAudit out;
    auto fail = [&](std::string msg) {
        if (out.ok) out.message = std::move(msg);
        out.ok = false;
    };
    double area = 0.0;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const double a = mesh.signed_area(c);
        if (!(a > 0.0)) fail("cell " + std::to_string(c) + " has non-positive area");
        area += a;
    }
    if (std::abs(area - polygon.area()) > 1e-12 * polygon.area())
        fail("cell areas do not sum to the polygon area");

    // Each directed edge appears once; an interior edge appears once in each direction.
    std::unordered_map<std::uint64_t, std::array<int, 2>> uses;
    for (const auto& c : mesh.cells())
        for (int e = 0; e < 3; ++e) {
            const Index a = c[e];
            const Index b = c[(e + 1) % 3];
            uses[edge_key(a, b)][a < b ? 0 : 1] += 1;
        }
    const double tol = 1e-10 * polygon.diameter();
    std::size_t single = 0;
    for (const auto& [key, u] : uses) {
        if (u[0] > 1 || u[1] > 1) {
            fail("edge used twice with the same orientation");
            continue;
        }
        if (u[0] + u[1] == 1) {
            ++single;
            const Index a = static_cast<Index>(key >> 32);
            const Index b = static_cast<Index>(key & 0xffffffffu);
            const Point mid = 0.5 * (mesh.points()[static_cast<std::size_t>(a)] +
                                     mesh.points()[static_cast<std::size_t>(b)]);
            if (polygon.edge_containing(mid, tol) < 0)
                fail("edge owned by a single cell lies inside the domain (non-conforming)");
        }
    }
    if (single != mesh.boundary_edges().size()) fail("boundary edge list does not match the mesh boundary");
    for (const auto& e : mesh.boundary_edges()) {
        auto it = uses.find(edge_key(e.a, e.b));
        if (it == uses.end() || it->second[0] + it->second[1] != 1) fail("tagged boundary edge is not a boundary edge");
        if (e.tag < 0 || e.tag >= static_cast<int>(polygon.size())) fail("boundary edge carries an invalid tag");
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Text I/O

std::string write_text(const TriMesh& mesh)
{
    std::string out = "tri-mesh v1\n";
    char buf[96];
    out += "points " + std::to_string(mesh.num_points()) + "\n";
    for (const auto& p : mesh.points()) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x(), p.y());
        out += buf;
    }
    out += "cells " + std::to_string(mesh.num_cells()) + "\n";
    for (const auto& c : mesh.cells()) {
        std::snprintf(buf, sizeof buf, "%lld %lld %lld\n", static_cast<long long>(c[0]),
                      static_cast<long long>(c[1]), static_cast<long long>(c[2]));
        out += buf;
    }
    out += "boundary_edges " + std::to_string(mesh.boundary_edges().size()) + "\n";
    for (const auto& e : mesh.boundary_edges()) {
        std::snprintf(buf, sizeof buf, "%lld %lld %d\n", static_cast<long long>(e.a), static_cast<long long>(e.b),
                      e.tag);
        out += buf;
    }
    return out;
}

TriMesh read_text(std::string_view text)
{
    std::istringstream in{std::string(text)};
    in.imbue(std::locale::classic());
    std::string word;
    std::string version;
    WNS_REQUIRE(in >> word >> version && word == "tri-mesh" && version == "v1", InvalidArgument,
                "mesh text must start with 'tri-mesh v1'");
    auto section = [&](const char* name) {
        std::string tag;
        long long count = -1;
        WNS_REQUIRE(in >> tag >> count && tag == name && count >= 0, InvalidArgument,
                    std::string("expected section '") + name + " <count>'");
        return static_cast<std::size_t>(count);
    };
    std::vector<Point> points(section("points"));
    for (auto& p : points) {
        std::string xs, ys;
        WNS_REQUIRE(in >> xs >> ys, InvalidArgument, "truncated points section");
        p = Point(std::strtod(xs.c_str(), nullptr), std::strtod(ys.c_str(), nullptr));
    }
    std::vector<Cell> cells(section("cells"));
    for (auto& c : cells) {
        long long a, b, d;
        WNS_REQUIRE(in >> a >> b >> d, InvalidArgument, "truncated cells section");
        c = {a, b, d};
    }
    std::vector<BoundaryEdge> boundary(section("boundary_edges"));
    for (auto& e : boundary) {
        long long a, b;
        int tag;
        WNS_REQUIRE(in >> a >> b >> tag, InvalidArgument, "truncated boundary_edges section");
        e = {a, b, tag};
    }
    for (const auto& e : boundary)
        WNS_REQUIRE(e.a >= 0 && e.b >= 0 && e.a < static_cast<Index>(points.size()) &&
                        e.b < static_cast<Index>(points.size()),
                    InvalidArgument, "boundary edge references a missing point");
    return TriMesh(std::move(points), std::move(cells), std::move(boundary));
}

} // namespace wns
