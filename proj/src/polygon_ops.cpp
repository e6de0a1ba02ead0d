#include "mforge/polygon_ops.hpp"

#include <algorithm>
#include <boost/geometry.hpp>
#include <boost/geometry/geometries/linestring.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include "mforge/error.hpp"

namespace bg = boost::geometry;

namespace mforge {
namespace {

using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, /*clockwise=*/false, /*closed=*/false>;
using BMulti = bg::model::multi_polygon<BPolygon>;

BPolygon to_boost(const Polygon& p) {
    BPolygon out;
    for (const auto& v : p.vertices()) out.outer().emplace_back(v.x, v.y);
    return out;
}

}  // namespace

double intersection_area(const Polygon& a, const Polygon& b) {
    if (!a.bounds().overlaps(b.bounds())) return 0.0;
    BMulti out;
    bg::intersection(to_boost(a), to_boost(b), out);
    return bg::area(out);
}

bool polygons_overlap_interior(const Polygon& a, const Polygon& b, double eps) {
    return intersection_area(a, b) > eps;
}

Polygon buffer_polyline(std::span<const Point2> polyline, double radius, double max_sagitta) {
    if (polyline.size() < 2 || !(radius > 0.0)) {
        throw Error("INVALID_ROUTE", "buffer needs >= 2 points and a positive radius");
    }
    // sagitta = r (1 - cos(pi / n))
    int per_circle = 16;
    if (max_sagitta < radius) {
        const double half_angle = std::acos(1.0 - max_sagitta / radius);
        per_circle = static_cast<int>(std::ceil(kPi / half_angle));
    }
    per_circle = std::clamp(per_circle, 16, 1 << 17);

    bg::model::linestring<BPoint> line;
    for (const auto& p : polyline) line.emplace_back(p.x, p.y);
    BMulti out;
    bg::buffer(line, out, bg::strategy::buffer::distance_symmetric<double>(radius),
               bg::strategy::buffer::side_straight(), bg::strategy::buffer::join_round(per_circle),
               bg::strategy::buffer::end_round(per_circle), bg::strategy::buffer::point_circle(per_circle));
    if (out.empty()) throw Error("INVALID_ROUTE", "empty buffer");
    const auto largest = std::max_element(out.begin(), out.end(), [](const BPolygon& x, const BPolygon& y) {
        return bg::area(x) < bg::area(y);
    });
    std::vector<Point2> ring;
    ring.reserve(largest->outer().size());
    for (const auto& p : largest->outer()) {
        const Point2 q{p.x(), p.y()};
        if (ring.empty() || !(ring.back() == q)) ring.push_back(q);
    }
    return Polygon(std::move(ring));
}

}  // namespace mforge
