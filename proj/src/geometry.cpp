#include "mforge/geometry.hpp"

#include <algorithm>
#include <numeric>

#include "mforge/error.hpp"

namespace mforge {

double normalize_deg(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    if (r >= 360.0) r -= 360.0;  // fmod of tiny negatives can round up to 360
    return r;
}

double circular_diff_deg(double a, double b) {
    double d = std::fabs(normalize_deg(a) - normalize_deg(b));
    return d > 180.0 ? 360.0 - d : d;
}

Point2 rotate_about(const Point2& p, const Point2& center, double deg) {
    const double c = std::cos(deg2rad(deg));
    const double s = std::sin(deg2rad(deg));
    const Point2 d = p - center;
    return {center.x + c * d.x - s * d.y, center.y + s * d.x + c * d.y};
}

double distance_to_segment(const Point2& p, const Point2& a, const Point2& b) {
    const Point2 d = b - a;
    const double len2 = dot(d, d);
    if (len2 == 0.0) return distance(p, a);
    const double s = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
    return distance(p, a + d * s);
}

double signed_area(std::span<const Point2> ring) {
    double acc = 0.0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        acc += cross(ring[i], ring[(i + 1) % n]);
    }
    return 0.5 * acc;
}

namespace {

double orient(const Point2& a, const Point2& b, const Point2& c) { return cross(b - a, c - a); }

bool on_segment_colinear(const Point2& p, const Point2& a, const Point2& b, double eps) {
    return p.x >= std::min(a.x, b.x) - eps && p.x <= std::max(a.x, b.x) + eps &&
           p.y >= std::min(a.y, b.y) - eps && p.y <= std::max(a.y, b.y) + eps;
}

// Closed segment intersection with a scale-aware orientation tolerance.
bool segments_intersect(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    const double scale = std::max({norm(b - a), norm(d - c), 1.0});
    const double eps = 1e-12 * scale * scale;
    const double o1 = orient(a, b, c);
    const double o2 = orient(a, b, d);
    const double o3 = orient(c, d, a);
    const double o4 = orient(c, d, b);
    auto sgn = [eps](double v) { return v > eps ? 1 : (v < -eps ? -1 : 0); };
    const int s1 = sgn(o1), s2 = sgn(o2), s3 = sgn(o3), s4 = sgn(o4);
    if (s1 * s2 < 0 && s3 * s4 < 0) return true;
    const double peps = 1e-12 * scale;
    if (s1 == 0 && on_segment_colinear(c, a, b, peps)) return true;
    if (s2 == 0 && on_segment_colinear(d, a, b, peps)) return true;
    if (s3 == 0 && on_segment_colinear(a, c, d, peps)) return true;
    if (s4 == 0 && on_segment_colinear(b, c, d, peps)) return true;
    return false;
}

Aabb2 bounds_of(std::span<const Point2> pts) {
    Aabb2 box{pts.front(), pts.front()};
    for (const auto& p : pts) {
        box.min.x = std::min(box.min.x, p.x);
        box.min.y = std::min(box.min.y, p.y);
        box.max.x = std::max(box.max.x, p.x);
        box.max.y = std::max(box.max.y, p.y);
    }
    return box;
}

[[noreturn]] void invalid(const std::string& why) { throw Error("INVALID_POLYGON", why); }

// Sweep over edges sorted by min x; only x-overlapping pairs are tested.
bool has_self_intersection(const std::vector<Point2>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto xmin = [&](std::size_t i) { return std::min(v[i].x, v[(i + 1) % n].x); };
    auto xmax = [&](std::size_t i) { return std::max(v[i].x, v[(i + 1) % n].x); };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xmin(a) < xmin(b); });

    for (std::size_t oi = 0; oi < n; ++oi) {
        const std::size_t i = order[oi];
        const Point2& a = v[i];
        const Point2& b = v[(i + 1) % n];
        for (std::size_t oj = oi + 1; oj < n && xmin(order[oj]) <= xmax(i); ++oj) {
            const std::size_t j = order[oj];
            const Point2& c = v[j];
            const Point2& d = v[(j + 1) % n];
            const bool adjacent = (j == (i + 1) % n) || (i == (j + 1) % n);
            if (adjacent) {
                // Adjacent edges share a vertex; they are only bad if they fold back.
                const Point2 shared = (j == (i + 1) % n) ? b : a;
                const Point2 p = (shared == b) ? a : b;
                const Point2 q = (shared == c) ? d : c;
                const Point2 u = p - shared;
                const Point2 w = q - shared;
                if (std::fabs(cross(u, w)) <= 1e-12 * norm(u) * norm(w) && dot(u, w) > 0.0) return true;
                continue;
            }
            if (segments_intersect(a, b, c, d)) return true;
        }
    }
    return false;
}

}  // namespace

Polygon::Polygon(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() >= 2 && vertices_.front() == vertices_.back()) vertices_.pop_back();
    if (vertices_.size() < 3) invalid("fewer than 3 vertices");
    for (const auto& p : vertices_) {
        if (!is_finite(p)) invalid("non-finite vertex");
    }
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        if (vertices_[i] == vertices_[(i + 1) % vertices_.size()]) invalid("zero-length edge");
    }
    bounds_ = bounds_of(vertices_);
    const double scale = std::max(bounds_.width(), bounds_.height());
    const double a = signed_area(vertices_);
    if (!(std::fabs(a) > 1e-12 * scale * scale) || scale == 0.0) invalid("zero area");
    if (has_self_intersection(vertices_)) invalid("self-intersecting");
    if (a < 0.0) std::reverse(vertices_.begin(), vertices_.end());
}

Polygon Polygon::rectangle(double min_x, double min_y, double max_x, double max_y) {
    return Polygon({{min_x, min_y}, {max_x, min_y}, {max_x, max_y}, {min_x, max_y}});
}

double Polygon::area() const { return signed_area(vertices_); }

Point2 Polygon::centroid() const {
    double cx = 0.0, cy = 0.0;
    const std::size_t n = vertices_.size();
    // Shift to the first vertex to keep the products well conditioned.
    const Point2 o = vertices_.front();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 p = vertices_[i] - o;
        const Point2 q = vertices_[(i + 1) % n] - o;
        const double c = cross(p, q);
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    const double a6 = 6.0 * area();
    return {o.x + cx / a6, o.y + cy / a6};
}

bool Polygon::is_convex() const {
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = vertices_[i];
        const Point2& b = vertices_[(i + 1) % n];
        const Point2& c = vertices_[(i + 2) % n];
        if (orient(a, b, c) < -1e-12 * std::max(1.0, dot(b - a, b - a))) return false;
    }
    return true;
}

Polygon BoundingBox3::footprint() const {
    const Point2 c = center.xy();
    std::vector<Point2> pts = {
        {c.x - extents.x, c.y - extents.y},
        {c.x + extents.x, c.y - extents.y},
        {c.x + extents.x, c.y + extents.y},
        {c.x - extents.x, c.y + extents.y},
    };
    for (auto& p : pts) p = rotate_about(p, c, yaw);
    return Polygon(std::move(pts));
}

bool point_in_polygon(const Point2& p, const Polygon& poly) {
    if (!poly.bounds().contains(p, kBoundaryEps)) return false;
    const auto& v = poly.vertices();
    const std::size_t n = v.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2& a = v[j];
        const Point2& b = v[i];
        if (distance_to_segment(p, a, b) <= kBoundaryEps) return true;
        if ((b.y > p.y) != (a.y > p.y)) {
            const double x_cross = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

bool segment_polygon_overlap(const Point2& a, const Point2& b, const Polygon& poly) {
    const Aabb2 seg{{std::min(a.x, b.x), std::min(a.y, b.y)}, {std::max(a.x, b.x), std::max(a.y, b.y)}};
    if (!seg.overlaps(poly.bounds(), kBoundaryEps)) return false;
    if (point_in_polygon(a, poly) || point_in_polygon(b, poly)) return true;
    const auto& v = poly.vertices();
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (segments_intersect(a, b, v[i], v[(i + 1) % n])) return true;
    }
    return false;
}

std::vector<std::pair<double, double>> segment_inside_intervals(const Point2& a, const Point2& b,
                                                                const Polygon& poly) {
    std::vector<std::pair<double, double>> out;
    const Point2 d = b - a;
    const double len2 = dot(d, d);
    if (len2 == 0.0) {
        if (point_in_polygon(a, poly)) out.emplace_back(0.0, 0.0);
        return out;
    }
    const Aabb2 seg{{std::min(a.x, b.x), std::min(a.y, b.y)}, {std::max(a.x, b.x), std::max(a.y, b.y)}};
    if (!seg.overlaps(poly.bounds(), kBoundaryEps)) return out;

    std::vector<double> params = {0.0, 1.0};
    const auto& v = poly.vertices();
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& q0 = v[i];
        const Point2& q1 = v[(i + 1) % n];
        const Point2 e = q1 - q0;
        const double denom = cross(d, e);
        const Point2 w = q0 - a;
        if (std::fabs(denom) > 1e-14 * std::sqrt(len2 * dot(e, e))) {
            const double s = cross(w, e) / denom;
            const double u = cross(w, d) / denom;
            if (u >= -1e-12 && u <= 1.0 + 1e-12 && s >= -1e-12 && s <= 1.0 + 1e-12) {
                params.push_back(std::clamp(s, 0.0, 1.0));
            }
        } else if (std::fabs(cross(w, d)) <= 1e-12 * len2) {
            params.push_back(std::clamp(dot(q0 - a, d) / len2, 0.0, 1.0));
            params.push_back(std::clamp(dot(q1 - a, d) / len2, 0.0, 1.0));
        }
    }
    std::sort(params.begin(), params.end());
    params.erase(std::unique(params.begin(), params.end(),
                             [](double x, double y) { return y - x <= 1e-13; }),
                 params.end());

    auto at = [&](double s) { return a + d * s; };
    bool open = false;
    double start = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double s = params[i];
        const bool in_point = point_in_polygon(at(s), poly);
        if (!open && in_point) {
            open = true;
            start = s;
        } else if (open && !in_point) {
            out.emplace_back(start, params[i - 1]);
            open = false;
        }
        const bool last = i + 1 == params.size();
        const bool mid_in = !last && point_in_polygon(at(0.5 * (s + params[i + 1])), poly);
        if (open && (last || !mid_in)) {
            out.emplace_back(start, s);
            open = false;
        } else if (!open && mid_in) {
            // Entry without a detected crossing point (numerical); start here.
            open = true;
            start = s;
        }
    }
    return out;
}

bool line_of_sight(const Point3& a_in, const Point3& b_in, std::span<const ExtrudedObstacle> obstacles) {
    // Canonical endpoint order keeps the predicate exactly symmetric.
    const bool swap = std::tie(b_in.x, b_in.y, b_in.z) < std::tie(a_in.x, a_in.y, a_in.z);
    const Point3& a = swap ? b_in : a_in;
    const Point3& b = swap ? a_in : b_in;
    const Aabb2 seg{{std::min(a.x, b.x), std::min(a.y, b.y)}, {std::max(a.x, b.x), std::max(a.y, b.y)}};
    const bool vertical = a.x == b.x && a.y == b.y;
    for (const auto& obs : obstacles) {
        if (!seg.overlaps(obs.footprint.bounds(), kBoundaryEps)) continue;
        if (std::max(a.z, b.z) > obs.height && std::min(a.z, b.z) > obs.height) continue;
        if (vertical) {
            if (point_in_polygon(a.xy(), obs.footprint)) return false;
            continue;
        }
        for (const auto& [s0, s1] : segment_inside_intervals(a.xy(), b.xy(), obs.footprint)) {
            const double z0 = a.z + s0 * (b.z - a.z);
            const double z1 = a.z + s1 * (b.z - a.z);
            if (std::min(z0, z1) <= obs.height) return false;
        }
    }
    return true;
}

double relative_bearing(const Pose& target, const Point2& related) {
    const Point2 d = related - target.position.xy();
    if (norm(d) < 1e-9) {
        throw Error("DEGENERATE_GEOMETRY", "related point coincides with target position");
    }
    return normalize_deg(rad2deg(std::atan2(d.y, d.x)) - target.yaw);
}

bool polygons_intersect(const Polygon& a, const Polygon& b) {
    if (!a.bounds().overlaps(b.bounds(), kBoundaryEps)) return false;
    const auto& va = a.vertices();
    const auto& vb = b.vertices();
    for (std::size_t i = 0; i < va.size(); ++i) {
        for (std::size_t j = 0; j < vb.size(); ++j) {
            if (segments_intersect(va[i], va[(i + 1) % va.size()], vb[j], vb[(j + 1) % vb.size()])) return true;
        }
    }
    return point_in_polygon(va.front(), b) || point_in_polygon(vb.front(), a);
}

std::vector<Point2> clip_to_convex(std::span<const Point2> subject, const Polygon& clip) {
    std::vector<Point2> out(subject.begin(), subject.end());
    const auto& c = clip.vertices();
    for (std::size_t i = 0; i < c.size() && !out.empty(); ++i) {
        const Point2 e0 = c[i];
        const Point2 e1 = c[(i + 1) % c.size()];
        std::vector<Point2> in = std::move(out);
        out.clear();
        auto side = [&](const Point2& p) { return cross(e1 - e0, p - e0); };
        for (std::size_t k = 0; k < in.size(); ++k) {
            const Point2& p = in[k];
            const Point2& q = in[(k + 1) % in.size()];
            const double sp = side(p);
            const double sq = side(q);
            if (sp >= 0.0) out.push_back(p);
            if ((sp >= 0.0) != (sq >= 0.0)) {
                const double t = sp / (sp - sq);
                out.push_back(p + (q - p) * t);
            }
        }
    }
    std::vector<Point2> ring;
    for (const auto& p : out) {
        if (ring.empty() || distance(ring.back(), p) > 1e-9) ring.push_back(p);
    }
    while (ring.size() > 1 && distance(ring.back(), ring.front()) <= 1e-9) ring.pop_back();
    return ring;
}

}  // namespace mforge
