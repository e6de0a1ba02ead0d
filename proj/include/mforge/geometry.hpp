#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace mforge {

inline constexpr double kPi = 3.14159265358979323846;
/// Boundary tolerance for containment predicates, in meters.
inline constexpr double kBoundaryEps = 1e-9;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps any finite angle into [0, 360).
double normalize_deg(double deg);
/// Smallest absolute difference between two headings, in [0, 180].
double circular_diff_deg(double a, double b);

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
};

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Point3&, const Point3&) = default;
    Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Point2 xy() const { return {x, y}; }
};

inline double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Point2& a) { return std::hypot(a.x, a.y); }
inline double norm(const Point3& a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }
inline double distance(const Point2& a, const Point2& b) { return norm(b - a); }
inline double distance(const Point3& a, const Point3& b) { return norm(b - a); }
inline bool is_finite(const Point2& p) { return std::isfinite(p.x) && std::isfinite(p.y); }
inline bool is_finite(const Point3& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

/// Rotates `p` counterclockwise by `deg` about `center`.
Point2 rotate_about(const Point2& p, const Point2& center, double deg);
double distance_to_segment(const Point2& p, const Point2& a, const Point2& b);

struct Aabb2 {
    Point2 min;
    Point2 max;

    bool overlaps(const Aabb2& o, double eps = 0.0) const {
        return min.x <= o.max.x + eps && o.min.x <= max.x + eps && min.y <= o.max.y + eps &&
               o.min.y <= max.y + eps;
    }
    bool contains(const Point2& p, double eps = 0.0) const {
        return p.x >= min.x - eps && p.x <= max.x + eps && p.y >= min.y - eps &&
               p.y <= max.y + eps;
    }
    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
};

/// Simple, counterclockwise polygon with nonzero area.
///
/// The constructor enforces the invariants: at least three finite vertices,
/// no zero-length edges, no self-intersection and nonzero area. Clockwise
/// input is reversed, and an explicit closing vertex equal to the first one is
/// dropped. Violations throw `Error` with code INVALID_POLYGON.
class Polygon {
public:
    explicit Polygon(std::vector<Point2> vertices);

    static Polygon rectangle(double min_x, double min_y, double max_x, double max_y);

    const std::vector<Point2>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    const Aabb2& bounds() const { return bounds_; }
    double area() const;
    Point2 centroid() const;
    bool is_convex() const;

    friend bool operator==(const Polygon& a, const Polygon& b) { return a.vertices_ == b.vertices_; }

private:
    std::vector<Point2> vertices_;
    Aabb2 bounds_;
};

/// Signed shoelace area; positive for counterclockwise rings.
double signed_area(std::span<const Point2> ring);

struct ExtrudedObstacle {
    Polygon footprint;
    double height = 0.0;

    friend bool operator==(const ExtrudedObstacle&, const ExtrudedObstacle&) = default;
};

struct Pose {
    Point3 position;
    double yaw = 0.0;  // degrees, counterclockwise from +x (east), in [0, 360)

    Pose() = default;
    Pose(Point3 p, double yaw_deg) : position(p), yaw(normalize_deg(yaw_deg)) {}

    friend bool operator==(const Pose&, const Pose&) = default;
};

struct BoundingBox3 {
    Point3 center;
    Point3 extents;  // half sizes along the box's local axes
    double yaw = 0.0;

    double min_z() const { return center.z - extents.z; }
    double max_z() const { return center.z + extents.z; }
    Point3 top_center() const { return {center.x, center.y, max_z()}; }
    /// Plan-view rectangle of the box.
    Polygon footprint() const;

    friend bool operator==(const BoundingBox3&, const BoundingBox3&) = default;
};

/// Boundary-inclusive containment (edges within kBoundaryEps count as inside).
bool point_in_polygon(const Point2& p, const Polygon& poly);

/// True iff the closed segment a-b meets the closed polygon region.
bool segment_polygon_overlap(const Point2& a, const Point2& b, const Polygon& poly);

/// Parameter sub-intervals [s0, s1] of a + s(b - a), s in [0, 1], that lie in
/// the closed polygon. Sorted, disjoint; single touch points appear as s0 == s1.
std::vector<std::pair<double, double>> segment_inside_intervals(const Point2& a, const Point2& b,
                                                                const Polygon& poly);

/// Clear iff, for every obstacle, the segment's interpolated z strictly
/// exceeds the obstacle height wherever its plan projection is over the
/// footprint.
bool line_of_sight(const Point3& a, const Point3& b, std::span<const ExtrudedObstacle> obstacles);

/// Bearing of `related` seen from `target`, counterclockwise from the target's
/// heading, in [0, 360). Throws DEGENERATE_GEOMETRY for coincident points.
double relative_bearing(const Pose& target, const Point2& related);

/// Closed-region intersection test (touching counts).
bool polygons_intersect(const Polygon& a, const Polygon& b);
/// True iff the interiors overlap with positive area (beyond `eps`).
bool polygons_overlap_interior(const Polygon& a, const Polygon& b, double eps = 1e-7);

/// Sutherland-Hodgman clip of `subject` against a convex `clip` window.
/// Returns the raw ring (possibly empty or degenerate).
std::vector<Point2> clip_to_convex(std::span<const Point2> subject, const Polygon& clip);

}  // namespace mforge
