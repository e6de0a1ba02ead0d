#pragma once

// Brute-force reference implementations used by the tests. Nothing here
// calls into the library's geometry; each predicate is recomputed from
// first principles so that test and implementation disagree loudly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mforge/scenario.hpp"

namespace oracle {

using mforge::Point2;
using mforge::Point3;

inline constexpr double kPi = 3.14159265358979323846;

inline double seg_dist(const Point2& p, const Point2& a, const Point2& b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double s = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return std::hypot(p.x - (a.x + s * dx), p.y - (a.y + s * dy));
}

/// Winding-number containment; points within `eps` of an edge count as inside.
inline bool contains(const std::vector<Point2>& v, const Point2& p, double eps = 1e-9) {
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (seg_dist(p, v[i], v[(i + 1) % n]) <= eps) return true;
    }
    int wn = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = v[i];
        const Point2& b = v[(i + 1) % n];
        const double side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if (a.y <= p.y) {
            if (b.y > p.y && side > 0) ++wn;
        } else if (b.y <= p.y && side < 0) {
            --wn;
        }
    }
    return wn != 0;
}

inline bool contains(const mforge::Polygon& poly, const Point2& p, double eps = 1e-9) {
    return contains(poly.vertices(), p, eps);
}

/// Line of sight by marching along the 3D segment in `step` meter increments.
inline bool los_sampled(const Point3& a, const Point3& b, const std::vector<mforge::ExtrudedObstacle>& obs,
                        double step = 0.01) {
    const double len = std::sqrt((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y) + (b.z - a.z) * (b.z - a.z));
    const auto n = static_cast<long>(std::ceil(len / step));
    for (long k = 0; k <= n; ++k) {
        const double s = n ? static_cast<double>(k) / static_cast<double>(n) : 0.0;
        const Point3 q{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), a.z + s * (b.z - a.z)};
        for (const auto& o : obs) {
            if (q.z <= o.height && contains(o.footprint, {q.x, q.y}, 0.0)) return false;
        }
    }
    return true;
}

/// Plan-view position of a sample list at time t (clamped at both ends).
inline Point2 path_xy(const std::vector<mforge::PathSample>& s, double t) {
    if (t <= s.front().t) return {s.front().pose.position.x, s.front().pose.position.y};
    if (t >= s.back().t) return {s.back().pose.position.x, s.back().pose.position.y};
    std::size_t i = 1;
    while (s[i].t < t) ++i;
    const double u = (t - s[i - 1].t) / (s[i].t - s[i - 1].t);
    const auto& p = s[i - 1].pose.position;
    const auto& q = s[i].pose.position;
    return {p.x + u * (q.x - p.x), p.y + u * (q.y - p.y)};
}

inline Point3 path_xyz(const std::vector<mforge::PathSample>& s, double t) {
    if (t <= s.front().t) return s.front().pose.position;
    if (t >= s.back().t) return s.back().pose.position;
    std::size_t i = 1;
    while (s[i].t < t) ++i;
    const double u = (t - s[i - 1].t) / (s[i].t - s[i - 1].t);
    const auto& p = s[i - 1].pose.position;
    const auto& q = s[i].pose.position;
    return {p.x + u * (q.x - p.x), p.y + u * (q.y - p.y), p.z + u * (q.z - p.z)};
}

struct Interval {
    std::string id;
    double enter = 0.0;
    double exit = 0.0;
};

/// Violation intervals by sampling the path every `dt` seconds.
inline std::vector<Interval> koz_sampled(const std::vector<mforge::PathSample>& s,
                                         const std::vector<mforge::KeepOutZone>& kozs, double dt = 1e-3) {
    std::vector<Interval> out;
    const double t0 = s.front().t, t1 = s.back().t;
    const auto n = static_cast<long>(std::llround((t1 - t0) / dt));
    for (const auto& k : kozs) {
        bool in = false;
        Interval cur{k.id};
        for (long i = 0; i <= n; ++i) {
            const double t = i == n ? t1 : t0 + static_cast<double>(i) * dt;
            const bool active = !k.window || (k.window->net <= t && t <= k.window->nlt);
            const bool inside = active && contains(k.polygon, path_xy(s, t));
            if (inside && !in) cur.enter = t;
            if (inside) cur.exit = t;
            if (!inside && in) out.push_back(cur);
            in = inside;
        }
        if (in) out.push_back(cur);
    }
    std::sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) { return a.enter < b.enter; });
    return out;
}

/// Separating-axis overlap test for convex polygons (touching counts).
inline bool convex_overlap(const std::vector<Point2>& a, const std::vector<Point2>& b) {
    auto separated = [](const std::vector<Point2>& p, const std::vector<Point2>& q) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            const Point2& u = p[i];
            const Point2& w = p[(i + 1) % p.size()];
            const Point2 axis{-(w.y - u.y), w.x - u.x};
            double pmin = 1e300, pmax = -1e300, qmin = 1e300, qmax = -1e300;
            for (const auto& v : p) {
                const double d = v.x * axis.x + v.y * axis.y;
                pmin = std::min(pmin, d);
                pmax = std::max(pmax, d);
            }
            for (const auto& v : q) {
                const double d = v.x * axis.x + v.y * axis.y;
                qmin = std::min(qmin, d);
                qmax = std::max(qmax, d);
            }
            if (pmax < qmin || qmax < pmin) return true;
        }
        return false;
    };
    return !separated(a, b) && !separated(b, a);
}

/// Corners of an oriented box footprint.
inline std::vector<Point2> box_corners(const mforge::BoundingBox3& b) {
    const double c = std::cos(b.yaw * kPi / 180.0), s = std::sin(b.yaw * kPi / 180.0);
    std::vector<Point2> out;
    const double sx[] = {-1, 1, 1, -1}, sy[] = {-1, -1, 1, 1};
    for (int i = 0; i < 4; ++i) {
        const double lx = sx[i] * b.extents.x, ly = sy[i] * b.extents.y;
        out.push_back({b.center.x + c * lx - s * ly, b.center.y + s * lx + c * ly});
    }
    return out;
}

/// Bearing of `p` in the body frame of a pose: rotate the offset by -yaw, then atan2.
inline double body_bearing(const mforge::Pose& pose, const Point2& p) {
    const double dx = p.x - pose.position.x, dy = p.y - pose.position.y;
    const double c = std::cos(-pose.yaw * kPi / 180.0), s = std::sin(-pose.yaw * kPi / 180.0);
    double deg = std::atan2(s * dx + c * dy, c * dx - s * dy) * 180.0 / kPi;
    if (deg < 0) deg += 360.0;
    return deg >= 360.0 ? deg - 360.0 : deg;
}

inline double ang_diff(double a, double b) {
    double d = std::fmod(std::fabs(a - b), 360.0);
    return d > 180.0 ? 360.0 - d : d;
}

/// Star-shaped simple polygon around `c` with `n` vertices, counterclockwise.
inline std::vector<Point2> star_polygon(std::mt19937_64& g, const Point2& c, double rmin, double rmax, int n) {
    std::uniform_real_distribution<double> r(rmin, rmax), jit(-0.35, 0.35);
    std::vector<Point2> v;
    for (int i = 0; i < n; ++i) {
        const double a = (static_cast<double>(i) + 0.5 + jit(g)) * 2.0 * kPi / n;
        const double rr = r(g);
        v.push_back({c.x + rr * std::cos(a), c.y + rr * std::sin(a)});
    }
    return v;
}

/// Polygon area by the shoelace formula.
inline double area(const std::vector<Point2>& v) {
    double a = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& p = v[i];
        const auto& q = v[(i + 1) % v.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
}

}  // namespace oracle
