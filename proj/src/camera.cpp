#include "mforge/camera.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "mforge/error.hpp"

namespace mforge {

namespace {

constexpr int kDiskSides = 128;

Point3 cross3(const Point3& a, const Point3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

}  // namespace

Polygon camera_footprint(const Pose& uav, const CameraModel& cam) {
    const double z = uav.position.z;
    if (!(z > 0.0)) throw Error("EMPTY_FOOTPRINT", "UAV is not above ground");
    if (!(cam.pitch < 0.0)) throw Error("EMPTY_FOOTPRINT", "optical axis does not intersect the ground");
    if (!(z < cam.max_range)) throw Error("EMPTY_FOOTPRINT", "ground is beyond camera range");
    const double ground_radius = std::sqrt(cam.max_range * cam.max_range - z * z);

    const double h = deg2rad(uav.yaw + cam.mount_yaw);
    const double p = deg2rad(cam.pitch);
    const Point3 forward{std::cos(p) * std::cos(h), std::cos(p) * std::sin(h), std::sin(p)};
    const Point3 right{std::sin(h), -std::cos(h), 0.0};
    const Point3 up = cross3(right, forward);
    const double th = std::tan(deg2rad(cam.hfov) / 2.0);
    const double tv = std::tan(deg2rad(cam.vfov) / 2.0);

    const Point2 origin = uav.position.xy();
    std::vector<Point2> quad;
    bool needs_clip = false;
    constexpr std::array<std::pair<int, int>, 4> corners = {{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};
    for (const auto& [a, b] : corners) {
        const Point3 d = forward + right * (a * th) + up * (b * tv);
        Point2 g;
        if (d.z < 0.0) {
            const double s = z / -d.z;
            g = origin + Point2{d.x, d.y} * s;
        } else {
            const Point2 dir{d.x, d.y};
            g = origin + dir * (2.0 * ground_radius / norm(dir));
        }
        if (distance(g, origin) > ground_radius) needs_clip = true;
        quad.push_back(g);
    }
    if (signed_area(quad) < 0.0) std::reverse(quad.begin(), quad.end());
    if (!needs_clip) return Polygon(std::move(quad));

    std::vector<Point2> disk;
    for (int i = 0; i < kDiskSides; ++i) {
        const double ang = 2.0 * kPi * i / kDiskSides;
        disk.push_back(origin + Point2{std::cos(ang), std::sin(ang)} * ground_radius);
    }
    auto clipped = clip_to_convex(quad, Polygon(std::move(disk)));
    try {
        return Polygon(std::move(clipped));
    } catch (const Error&) {
        throw Error("EMPTY_FOOTPRINT", "footprint degenerates after range clipping");
    }
}

std::optional<Polygon> try_camera_footprint(const Pose& uav, const CameraModel& cam) {
    try {
        return camera_footprint(uav, cam);
    } catch (const Error&) {
        return std::nullopt;
    }
}

double footprint_width(const CameraModel& cam, double altitude) {
    const auto fp = try_camera_footprint(Pose({0.0, 0.0, altitude}, 0.0), cam);
    return fp ? fp->bounds().height() : 0.0;
}

}  // namespace mforge
