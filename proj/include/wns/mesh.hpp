#ifndef WNS_MESH_HPP
#define WNS_MESH_HPP

#include "wns/common.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wns {

/// Strictly convex polygon, vertices stored counterclockwise.
class Polygon {
public:
    /// Throws InvalidArgument when fewer than three vertices are given, a vertex repeats, or the
    /// boundary is not strictly convex. Clockwise input is rejected as well.
    explicit Polygon(std::vector<Point> vertices);

    static Polygon unit_square();

    const std::vector<Point>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    double area() const;
    double diameter() const;

    /// Closed containment with absolute tolerance `tol`.
    bool contains(const Point& x, double tol = 0.0) const;
    /// Euclidean distance to the boundary (positive inside, negative outside).
    double signed_boundary_distance(const Point& x) const;
    /// Index of the boundary edge (v_i, v_{i+1}) that contains x within tol, or -1.
    int edge_containing(const Point& x, double tol) const;

    Point bbox_min() const;
    Point bbox_max() const;

private:
    std::vector<Point> vertices_;
};

struct BoundaryEdge {
    Index a = 0;
    Index b = 0;
    int tag = 0; ///< index of the polygon edge the segment lies on
};

using Cell = std::array<Index, 3>;

/// A point located inside a cell.
struct CellLocation {
    Index cell = -1;
    std::array<double, 3> bary{}; ///< barycentric coordinates w.r.t. the cell's vertices
};

/// Conforming triangulation. Immutable after construction.
class TriMesh {
public:
    TriMesh() = default;
    TriMesh(std::vector<Point> points, std::vector<Cell> cells, std::vector<BoundaryEdge> boundary);

    const std::vector<Point>& points() const { return points_; }
    const std::vector<Cell>& cells() const { return cells_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }
    Index num_points() const { return static_cast<Index>(points_.size()); }
    Index num_cells() const { return static_cast<Index>(cells_.size()); }

    double h_max() const { return h_max_; }
    double h_min() const { return h_min_; }

    double signed_area(Index c) const;
    double diameter(Index c) const;
    std::array<Point, 3> vertices(Index c) const;
    Point map_to_physical(Index c, const std::array<double, 3>& bary) const;
    std::array<double, 3> barycentric(Index c, const Point& x) const;

    /// Cell containing x together with its barycentric coordinates. Points on shared edges or
    /// vertices resolve to the lowest cell index among the cells containing them. Returns nullopt
    /// for points outside the mesh.
    std::optional<CellLocation> locate(const Point& x) const;

    /// Candidate cells whose bounding boxes meet the box [lo, hi].
    std::vector<Index> cells_near(const Point& lo, const Point& hi) const;

    std::uint64_t checksum() const;

private:
    void build_index();

    std::vector<Point> points_;
    std::vector<Cell> cells_;
    std::vector<BoundaryEdge> boundary_;
    double h_max_ = 0.0;
    double h_min_ = 0.0;

    // uniform bucket grid over the bounding box
    Point lo_ = Point::Zero();
    Point cell_size_ = Point::Ones();
    int nx_ = 0;
    int ny_ = 0;
    std::vector<std::vector<Index>> buckets_;
};

/// Grading toward an interior point z: local size h_T ~ h dist(T, z)^(1 - mu), h = 1/base_n.
struct GradingSpec {
    Point center = Point(0.5, 0.5);
    double mu = 1.0;
    int base_n = 4;
};

/// Fan triangulation of the polygon from its first vertex, each fan triangle split into n^2
/// congruent children. For the unit square this is the usual diagonal-split n x n grid.
TriMesh generate_uniform(const Polygon& polygon, int n);

/// Fan triangulation from the grading center, each fan triangle subdivided base_n times and the
/// lattice levels mapped radially by s -> s^(1/mu). The center is always a mesh vertex.
TriMesh generate_graded(const Polygon& polygon, const GradingSpec& spec);

/// Red refinement. Children of parent cell c occupy indices 4c .. 4c+3; child 4c+3 is the
/// interior one.
TriMesh uniform_refine(const TriMesh& mesh);

struct MeshAudit {
    bool ok = true;
    std::string message;
};

/// Geometric validation: positive areas, every edge shared by at most two cells, single-cell
/// edges on the polygon boundary, boundary edge list consistent, area sum matches polygon area.
MeshAudit audit(const TriMesh& mesh, const Polygon& polygon);

/// Plain-text mesh format `tri-mesh v1`.
std::string write_text(const TriMesh& mesh);
TriMesh read_text(std::string_view text);

} // namespace wns

#endif
