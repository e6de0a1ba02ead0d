#include "mforge/planning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <unordered_map>

#include "mforge/camera.hpp"
#include "mforge/constraints.hpp"
#include "mforge/error.hpp"
#include "mforge/relations.hpp"
#include "mforge/rng.hpp"

namespace mforge {

namespace {

double segment_segment_distance(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    return std::min({distance_to_segment(a, c, d), distance_to_segment(b, c, d), distance_to_segment(c, a, b),
                     distance_to_segment(d, a, b)});
}

// Static collision regions: inflated obstacle footprints plus always-active KOZs.
class CollisionWorld {
public:
    CollisionWorld(std::span<const ExtrudedObstacle> obstacles, std::span<const KeepOutZone> kozs, double clearance)
        : clearance_(clearance) {
        for (const auto& o : obstacles) regions_.push_back({&o.footprint, clearance});
        for (const auto& k : kozs) {
            if (!k.window) regions_.push_back({&k.polygon, 0.0});
        }
    }

    bool point_free(const Point2& p) const { return segment_free(p, p); }

    bool segment_free(const Point2& a, const Point2& b) const {
        const Aabb2 seg{{std::min(a.x, b.x), std::min(a.y, b.y)}, {std::max(a.x, b.x), std::max(a.y, b.y)}};
        for (const auto& r : regions_) {
            if (!seg.overlaps(r.poly->bounds(), r.inflate + kBoundaryEps)) continue;
            if (segment_polygon_overlap(a, b, *r.poly)) return false;
            if (r.inflate > 0.0) {
                const auto& v = r.poly->vertices();
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (segment_segment_distance(a, b, v[i], v[(i + 1) % v.size()]) < r.inflate) return false;
                }
            }
        }
        return true;
    }

private:
    struct Region {
        const Polygon* poly;
        double inflate;
    };
    std::vector<Region> regions_;
    double clearance_;
};

// Uniform-grid bucketing of tree nodes. Queries return the same node as a
// linear scan: smallest distance, ties to the lowest index.
class NodeIndex {
public:
    explicit NodeIndex(double cell) : cell_(cell) {}

    void insert(const Point2& p) {
        nodes_.push_back(p);
        buckets_[key(cell_of(p.x), cell_of(p.y))].push_back(nodes_.size() - 1);
    }

    const Point2& operator[](std::size_t i) const { return nodes_[i]; }
    std::size_t size() const { return nodes_.size(); }

    std::pair<std::size_t, double> nearest(const Point2& q) const {
        std::size_t best = nodes_.size();
        double best_d = std::numeric_limits<double>::infinity();
        auto consider = [&](std::size_t i) {
            const double d = distance(nodes_[i], q);
            if (d < best_d || (d == best_d && i < best)) {
                best_d = d;
                best = i;
            }
        };
        const long cx = cell_of(q.x), cy = cell_of(q.y);
        for (long r = 0;; ++r) {
            const double side = static_cast<double>(2 * r + 1);
            if (side * side > static_cast<double>(nodes_.size())) break;
            for (long dx = -r; dx <= r; ++dx) {
                for (long dy = -r; dy <= r; ++dy) {
                    if (std::max(std::labs(dx), std::labs(dy)) != r) continue;
                    const auto it = buckets_.find(key(cx + dx, cy + dy));
                    if (it == buckets_.end()) continue;
                    for (std::size_t i : it->second) consider(i);
                }
            }
            // Every node outside the searched square is farther than r cells.
            if (best < nodes_.size() && best_d <= static_cast<double>(r) * cell_) return {best, best_d};
        }
        best = nodes_.size();
        best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nodes_.size(); ++i) consider(i);
        return {best, best_d};
    }

private:
    long cell_of(double v) const { return static_cast<long>(std::floor(v / cell_)); }
    static std::uint64_t key(long x, long y) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) | static_cast<std::uint32_t>(y);
    }

    double cell_;
    std::vector<Point2> nodes_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

double heading_of(const Point2& from, const Point2& to) {
    const Point2 d = to - from;
    return normalize_deg(rad2deg(std::atan2(d.y, d.x)));
}

}  // namespace

std::vector<Point2> rrt_plan(const Point2& start, const Point2& goal, std::span<const ExtrudedObstacle> obstacles,
                             std::span<const KeepOutZone> kozs, const RrtConfig& cfg) {
    if (!(cfg.step_size > 0.0 && cfg.goal_radius > 0.0 && cfg.max_iters > 0 && cfg.goal_bias >= 0.0 &&
          cfg.goal_bias <= 1.0)) {
        throw Error("INVALID_CONFIG", "RRT parameters out of range");
    }
    const CollisionWorld world(obstacles, kozs, cfg.clearance);
    if (!world.point_free(start)) throw Error("INVALID_ENDPOINT", "start is in collision");
    if (!world.point_free(goal)) throw Error("INVALID_ENDPOINT", "goal is in collision");
    if (start == goal) return {start};

    const double margin = std::max(50.0, 0.5 * distance(start, goal));
    const Point2 lo{std::min(start.x, goal.x) - margin, std::min(start.y, goal.y) - margin};
    const Point2 hi{std::max(start.x, goal.x) + margin, std::max(start.y, goal.y) + margin};

    Rng rng(derive_seed(cfg.seed, 0x5252));
    NodeIndex nodes(2.0 * cfg.step_size);
    nodes.insert(start);
    std::vector<int> parent{-1};
    int goal_node = -1;
    for (int it = 0; it < cfg.max_iters && goal_node < 0; ++it) {
        const Point2 sample = rng.bernoulli(cfg.goal_bias) ? goal : Point2{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y)};
        const auto [best, best_d] = nodes.nearest(sample);
        if (best_d < 1e-9) continue;
        const Point2 from = nodes[best];
        const Point2 to = best_d <= cfg.step_size ? sample : from + (sample - from) * (cfg.step_size / best_d);
        if (!world.segment_free(from, to)) continue;
        nodes.insert(to);
        parent.push_back(static_cast<int>(best));
        const int idx = static_cast<int>(nodes.size()) - 1;
        if (distance(to, goal) <= cfg.goal_radius && world.segment_free(to, goal)) {
            if (to == goal) {
                goal_node = idx;
            } else {
                nodes.insert(goal);
                parent.push_back(idx);
                goal_node = idx + 1;
            }
        }
    }
    if (goal_node < 0) throw Error("NO_PATH", "RRT exhausted its iteration budget");

    std::vector<Point2> path;
    for (int i = goal_node; i >= 0; i = parent[static_cast<std::size_t>(i)]) path.push_back(nodes[static_cast<std::size_t>(i)]);
    std::reverse(path.begin(), path.end());

    for (int a = 0; a < cfg.shortcut_attempts && path.size() > 2; ++a) {
        const std::size_t i = rng.index(path.size() - 2);
        const std::size_t j = i + 2 + rng.index(path.size() - i - 2);
        if (world.segment_free(path[i], path[j])) {
            path.erase(path.begin() + static_cast<std::ptrdiff_t>(i) + 1, path.begin() + static_cast<std::ptrdiff_t>(j));
        }
    }
    return path;
}

TimedPath plan_entity_route(const Point2& start, const Point2& goal, std::span<const ExtrudedObstacle> obstacles,
                            const RrtConfig& cfg, double speed, double z, double start_time) {
    if (!(speed > 0.0)) throw Error("INVALID_CONFIG", "speed must be positive");
    const auto pts = rrt_plan(start, goal, obstacles, {}, cfg);
    std::vector<PathSample> samples;
    double t = start_time;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i > 0) t += distance(pts[i - 1], pts[i]) / speed;
        double yaw = 0.0;
        if (pts.size() > 1) yaw = i + 1 < pts.size() ? heading_of(pts[i], pts[i + 1]) : heading_of(pts[i - 1], pts[i]);
        samples.push_back({t, Pose({pts[i].x, pts[i].y, z}, yaw)});
    }
    return TimedPath(std::move(samples));
}

bool target_in_view(const Pose& uav, const CameraModel& cam, const BoundingBox3& target_box,
                    std::span<const ExtrudedObstacle> obstacles, bool require_los) {
    const auto fp = try_camera_footprint(uav, cam);
    if (!fp || !point_in_polygon(target_box.center.xy(), *fp)) return false;
    return !require_los || line_of_sight(uav.position, target_box.top_center(), obstacles);
}

LookGuaranteePlan plan_look_guarantee_path(const Pose& uav_start, const EntitySpec& target, const CameraModel& cam,
                                           std::span<const ExtrudedObstacle> obstacles,
                                           std::span<const KeepOutZone> kozs, const UavKinematics& kin,
                                           const RrtConfig& cfg, const LookGuaranteeOptions& opts) {
    const double z = std::clamp(uav_start.position.z, kin.z_min, kin.z_max);
    const double low = std::min(z, uav_start.position.z);
    std::vector<ExtrudedObstacle> flight_obstacles;
    for (const auto& o : obstacles) {
        if (o.height >= low) flight_obstacles.push_back(o);
    }

    const double dt = opts.tick_dt;
    const double speed = opts.speed_fraction * kin.max_speed;
    const bool moving = target.trajectory.has_value();
    std::vector<double> taus;
    if (moving) {
        const double horizon = target.trajectory->end_time();
        const auto last_tick = static_cast<long>(std::floor(horizon / dt + 1e-9));
        const long count = 24;
        for (long i = 0; i <= count; ++i) {
            const long k = last_tick * i / count;
            const double tau = static_cast<double>(k) * dt;
            if (taus.empty() || taus.back() != tau) taus.push_back(tau);
        }
        taus.push_back(horizon);
    } else {
        taus.push_back(0.0);
    }

    Rng rng(derive_seed(cfg.seed, 0x4c4f4f4b));
    const double heading_offset = rng.uniform(0.0, 360.0);

    struct CandidateVantage {
        double tau;
        Pose pose;
        double rank;
        bool parked;
    };

    // Planning tiers: first every KOZ is treated as always active; then only
    // the window-less ones, relying on the timed re-check below.
    std::vector<KeepOutZone> all_static;
    std::vector<KeepOutZone> unwindowed;
    for (const auto& k : kozs) {
        all_static.push_back({k.id, k.polygon, std::nullopt});
        if (!k.window) unwindowed.push_back(k);
    }
    std::vector<const std::vector<KeepOutZone>*> tiers{&all_static};
    if (unwindowed.size() != all_static.size()) tiers.push_back(&unwindowed);

    int tier_index = 0;
    for (const auto* planning_kozs : tiers) {
        ++tier_index;
        const CollisionWorld world(flight_obstacles, *planning_kozs, cfg.clearance);
        if (!world.point_free(uav_start.position.xy())) continue;

        std::vector<CandidateVantage> candidates;
        for (std::size_t ti = 0; ti < taus.size(); ++ti) {
            const double tau = taus[ti];
            // The last entry of a moving target stands for its parked final pose.
            const bool parked = moving && ti + 1 == taus.size();
            const BoundingBox3 box = entity_state_at(target, tau).bbox;
            for (int k = 0; k < opts.headings; ++k) {
                const double psi = normalize_deg(heading_offset + 360.0 * k / opts.headings);
                const auto fp0 = try_camera_footprint(Pose({0.0, 0.0, z}, psi), cam);
                if (!fp0) continue;
                const Point2 c = fp0->centroid();
                std::vector<Point2> offsets{c};
                for (const auto& v : fp0->vertices()) {
                    for (const double f : {0.5, 0.85}) offsets.push_back(c + (v - c) * f);
                }
                for (const auto& o : offsets) {
                    const Point2 xy = box.center.xy() - o;
                    const Pose pose({xy.x, xy.y, z}, psi);
                    if (!world.point_free(xy)) continue;
                    if (!target_in_view(pose, cam, box, obstacles)) continue;
                    const double straight = distance(uav_start.position, pose.position);
                    if (moving && !parked && straight / speed > tau) continue;
                    const double rank = !moving ? straight : parked ? 1e12 + straight : tau * 1e6 + straight;
                    candidates.push_back({tau, pose, rank, parked});
                }
            }
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const CandidateVantage& a, const CandidateVantage& b) { return a.rank < b.rank; });

        int attempts = 0;
        for (const auto& cand : candidates) {
            if (attempts >= opts.max_attempts) break;
            ++attempts;
            std::vector<Point2> route;
            const Point2 from = uav_start.position.xy();
            const Point2 to = cand.pose.position.xy();
            if (world.segment_free(from, to)) {
                route = {from, to};
            } else {
                RrtConfig rc = cfg;
                rc.seed = derive_seed(cfg.seed, 0x565450, static_cast<std::uint64_t>(tier_index),
                                      static_cast<std::uint64_t>(attempts));
                try {
                    route = rrt_plan(from, to, flight_obstacles, *planning_kozs, rc);
                } catch (const Error&) {
                    continue;
                }
            }

            std::vector<PathSample> samples{{0.0, uav_start}};
            double t = 0.0;
            const double dyaw = circular_diff_deg(uav_start.yaw, cand.pose.yaw);
            if (dyaw > 1e-9) {
                t += dyaw / kin.max_yaw_rate;
                samples.push_back({t, Pose(uav_start.position, cand.pose.yaw)});
            }
            std::vector<Point3> legs;
            for (std::size_t i = 1; i < route.size(); ++i) legs.push_back({route[i].x, route[i].y, z});
            if (legs.empty() && uav_start.position.z != z) legs.push_back({uav_start.position.x, uav_start.position.y, z});
            Point3 prev = uav_start.position;
            for (const auto& p : legs) {
                const double d = distance(prev, p);
                if (d <= 0.0) continue;
                t += d / speed;
                samples.push_back({t, Pose(p, cand.pose.yaw)});
                prev = p;
            }
            const double arrival = t;
            double tau = cand.tau;
            if (!moving || cand.parked) {
                const double earliest = std::max(arrival, moving ? target.trajectory->end_time() : 0.0);
                tau = static_cast<double>(static_cast<long>(std::ceil(earliest / dt - 1e-9))) * dt;
            } else if (arrival > tau) {
                continue;
            }
            if (tau > samples.back().t) samples.push_back({tau, cand.pose});
            samples.push_back({std::max(tau, samples.back().t) + opts.hold, cand.pose});
            TimedPath path(std::move(samples));

            if (!koz_violations(path, kozs).empty()) continue;
            const BoundingBox3 box = entity_state_at(target, tau).bbox;
            if (!target_in_view(path.pose_at(tau), cam, box, obstacles)) continue;
            return LookGuaranteePlan{std::move(path), tau, cand.pose};
        }
    }
    throw Error("NO_VANTAGE", "no reachable vantage puts the target in view");
}

std::vector<Point3> SearchPlan::waypoints() const {
    std::vector<Point3> out;
    for (const auto& leg : legs) out.insert(out.end(), leg.waypoints.begin(), leg.waypoints.end());
    return out;
}

std::vector<Point3> sweep_polygon(const Polygon& poly, double spacing, double altitude) {
    const Aabb2& b = poly.bounds();
    const auto lanes = std::max<long>(1, static_cast<long>(std::ceil(b.height() / spacing - 1e-9)));
    const double strip = b.height() / static_cast<double>(lanes);
    std::vector<Point3> out;
    bool eastward = true;
    for (long k = 0; k < lanes; ++k) {
        const double y0 = b.min.y + strip * static_cast<double>(k);
        const double y1 = k + 1 == lanes ? b.max.y : y0 + strip;
        const Polygon window = Polygon::rectangle(b.min.x - 1.0, y0, b.max.x + 1.0, y1);
        const auto ring = clip_to_convex(poly.vertices(), window);
        if (ring.size() < 3) continue;
        double x_lo = ring.front().x, x_hi = ring.front().x;
        for (const auto& p : ring) {
            x_lo = std::min(x_lo, p.x);
            x_hi = std::max(x_hi, p.x);
        }
        const double y = 0.5 * (y0 + y1);
        if (eastward) {
            out.push_back({x_lo, y, altitude});
            out.push_back({x_hi, y, altitude});
        } else {
            out.push_back({x_hi, y, altitude});
            out.push_back({x_lo, y, altitude});
        }
        eastward = !eastward;
    }
    return out;
}

SearchPlan plan_area_search(std::span<const AreaOfInterest> aois, const AreaPriorMap* priors, const CameraModel& cam,
                            double altitude) {
    if (aois.empty()) throw Error("MISSING_AOI", "area search needs at least one AOI");
    const double width = footprint_width(cam, altitude);
    if (!(width > 0.0)) throw Error("INVALID_CAMERA", "camera footprint has no width at this altitude");
    SearchPlan plan;
    plan.track_spacing = width;
    if (priors && !priors->cells.empty()) {
        std::vector<std::size_t> order(priors->cells.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return priors->cells[a].prob > priors->cells[b].prob;
        });
        for (const std::size_t i : order) {
            plan.legs.push_back({"cell[" + std::to_string(i) + "]", sweep_polygon(priors->cells[i].polygon, width, altitude)});
        }
        const std::size_t top = order.front();
        plan.legs.push_back(
            {"cell[" + std::to_string(top) + "]:revisit", sweep_polygon(priors->cells[top].polygon, width, altitude)});
    } else {
        for (const auto& aoi : aois) plan.legs.push_back({aoi.id, sweep_polygon(aoi.polygon, width, altitude)});
    }
    return plan;
}

FollowStep follow_waypoints(const Pose& pose, std::span<const Point3> waypoints, const UavKinematics& kin, double dt,
                            double goal_radius) {
    if (waypoints.empty()) return {pose, false};
    Point3 goal = waypoints.front();
    goal.z = std::clamp(goal.z, kin.z_min, kin.z_max);
    const Point3 d = goal - pose.position;
    const double dist = norm(d);
    const double step = std::min(kin.max_speed * dt, dist);
    Point3 next = dist > 0.0 ? pose.position + d * (step / dist) : pose.position;
    next.z = std::clamp(next.z, std::min(kin.z_min, pose.position.z), std::max(kin.z_max, pose.position.z));

    double yaw = pose.yaw;
    const double plan_dist = std::hypot(d.x, d.y);
    if (plan_dist > 1e-6) {
        const double desired = rad2deg(std::atan2(d.y, d.x));
        double delta = normalize_deg(desired - pose.yaw);
        if (delta > 180.0) delta -= 360.0;
        const double max_turn = kin.max_yaw_rate * dt;
        yaw = pose.yaw + std::clamp(delta, -max_turn, max_turn);
    }
    const bool consumed = distance(next, goal) <= goal_radius;
    return {Pose(next, yaw), consumed};
}

}  // namespace mforge
