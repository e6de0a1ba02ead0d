#pragma once

#include <random>
#include <string>
#include <vector>

#include "mforge/relations.hpp"
#include "mforge/scenario.hpp"

namespace fixture {

using namespace mforge;

inline EntitySpec car(const std::string& id, double x, double y, double yaw, Attributes attrs = {{"color", "blue"}, {"model", "sedan"}}) {
    EntitySpec e;
    e.id = id;
    e.class_name = "car";
    e.attributes = std::move(attrs);
    e.initial_pose = Pose({x, y, 0.0}, yaw);
    e.bbox = BoundingBox3{{x, y, 0.75}, {2.25, 0.95, 0.75}, yaw};
    return e;
}

inline EntitySpec structure(const std::string& id, const std::string& cls, double x, double y, Attributes attrs = {}) {
    EntitySpec e;
    e.id = id;
    e.class_name = cls;
    e.attributes = std::move(attrs);
    e.initial_pose = Pose({x, y, 0.0}, 0.0);
    e.bbox = BoundingBox3{{x, y, 1.5}, {1.5, 1.5, 1.5}, 0.0};
    return e;
}

/// Open 200 m x 200 m area-search scenario with one blue sedan target at (100, 100).
inline MissionDescription area_mission() {
    MissionDescription md;
    md.objective = Objective::AreaSearch;
    md.target = TargetSpec{"car_1", "car", {{"color", "blue"}, {"model", "sedan"}}};
    md.aois.push_back(AreaOfInterest{"aoi_0", Polygon::rectangle(0, 0, 200, 200), std::nullopt});
    md.mission_duration = 60.0;
    return md;
}

inline SimulationConfig open_config() {
    SimulationConfig cfg;
    auto target = car("car_1", 100, 100, 0);
    target.is_target = true;
    cfg.entities.push_back(target);
    cfg.uav_start = Pose({20, 20, 50}, 0);
    cfg.cameras.push_back(CameraModel{60, 60, 200, -90, 0});
    cfg.seed = 42;
    cfg.tick_dt = 0.1;
    return cfg;
}

/// Straight path from a to b over [t0, t1].
inline TimedPath line_path(Point3 a, Point3 b, double t0, double t1) {
    const double yaw = rad2deg(std::atan2(b.y - a.y, b.x - a.x));
    return TimedPath({{t0, Pose(a, yaw)}, {t1, Pose(b, yaw)}});
}


/// Random scene of `n` entities (entity 0 is the target car) packed into a
/// 30 m square, with stacked boxes, group memberships and two low obstacles.
inline SceneSnapshot random_scene(std::mt19937_64& g, int n) {
    std::uniform_real_distribution<double> pos(0, 30), yaw(0, 360), half(0.5, 2.5), height(1, 6);
    std::uniform_int_distribution<int> cls(0, 3), coin(0, 2);
    const char* classes[] = {"car", "garage", "tree", "group"};
    const char* colors[] = {"white", "red", "blue"};
    SceneSnapshot s;
    for (int i = 0; i < n; ++i) {
        SceneEntity e;
        e.id = (i == 0 ? "target" : "e") + std::to_string(i);
        e.class_name = i == 0 ? "car" : classes[cls(g)];
        e.attributes["color"] = colors[coin(g)];
        const double x = pos(g), y = pos(g), h = yaw(g);
        e.pose = Pose({x, y, 0}, h);
        const double hz = half(g) * 0.5;
        e.bbox = BoundingBox3{{x + half(g) - 1.5, y + half(g) - 1.5, hz}, {half(g), half(g), hz}, yaw(g)};
        if (i > 0 && coin(g) == 0) {
            // Rest this box on top of an earlier one, sometimes slightly off.
            const auto& base = s.entities[std::uniform_int_distribution<int>(0, i - 1)(g)];
            const double gap = std::uniform_real_distribution<double>(-0.4, 0.4)(g);
            e.bbox.center = {base.bbox.center.x + half(g) - 1.5, base.bbox.center.y + half(g) - 1.5,
                             base.bbox.max_z() + gap + hz};
        }
        s.entities.push_back(std::move(e));
    }
    std::uniform_int_distribution<int> pick(1, std::max(1, n - 1));
    if (n > 1) s.entities[0].attributes[kMemberOfAttribute] = s.entities[pick(g)].id;
    for (int k = 0; k < 2; ++k) {
        const double x = pos(g), y = pos(g);
        s.obstacles.push_back({Polygon::rectangle(x, y, x + half(g) * 2, y + half(g) * 2), height(g)});
    }
    return s;
}

/// Applies a rigid plan-view motion (rotation by `deg` about the origin, then translation).
inline SceneSnapshot moved(const SceneSnapshot& s, double deg, Point2 shift) {
    auto tf = [&](Point2 p) {
        const Point2 r = rotate_about(p, {0, 0}, deg);
        return Point2{r.x + shift.x, r.y + shift.y};
    };
    SceneSnapshot out = s;
    for (auto& e : out.entities) {
        const Point2 p = tf(e.pose.position.xy());
        e.pose = Pose({p.x, p.y, e.pose.position.z}, e.pose.yaw + deg);
        const Point2 c = tf(e.bbox.center.xy());
        e.bbox.center = {c.x, c.y, e.bbox.center.z};
        e.bbox.yaw = normalize_deg(e.bbox.yaw + deg);
    }
    for (auto& o : out.obstacles) {
        std::vector<Point2> v;
        for (const auto& q : o.footprint.vertices()) v.push_back(tf(q));
        o.footprint = Polygon(v);
    }
    return out;
}

struct KozInstance {
    TimedPath path;
    std::vector<KeepOutZone> kozs;
};

/// Random piecewise-linear path over a 100 m square plus one to three
/// star-shaped KOZs, roughly half of them with a time window.
inline KozInstance random_koz_instance(std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(0, 100), dt(2, 15), r(0, 1);
    std::uniform_int_distribution<int> nwp(2, 6), nk(1, 3), nv(3, 9);
    std::vector<PathSample> samples;
    double t = r(g) * 5;
    for (int i = 0, n = nwp(g); i < n; ++i) {
        samples.push_back({t, Pose({u(g), u(g), 30}, 0)});
        t += dt(g);
    }
    KozInstance out{TimedPath(samples), {}};
    const double t_end = samples.back().t;
    for (int k = 0, n = nk(g); k < n; ++k) {
        const Point2 c{u(g), u(g)};
        std::uniform_real_distribution<double> rad(5, 25), jit(-0.35, 0.35);
        const int m = nv(g);
        std::vector<Point2> v;
        for (int i = 0; i < m; ++i) {
            const double a = (i + 0.5 + jit(g)) * 2.0 * 3.14159265358979323846 / m;
            const double rr = rad(g);
            v.push_back({c.x + rr * std::cos(a), c.y + rr * std::sin(a)});
        }
        KeepOutZone koz{"koz_" + std::to_string(k), Polygon(v), std::nullopt};
        if (r(g) < 0.5) {
            const double a = r(g) * t_end, b = r(g) * t_end;
            koz.window = TimeWindow{std::min(a, b), std::max(a, b)};
        }
        out.kozs.push_back(std::move(koz));
    }
    return out;
}

}  // namespace fixture
