#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mforge/payload.hpp"
#include "mforge/scenario.hpp"
#include "mforge/trajectory.hpp"

namespace mforge {

inline constexpr double kDefaultCarSpeed = 8.0;
inline constexpr double kWaypointGoalRadius = 1.0;

struct RrtConfig {
    double step_size = 5.0;
    double goal_bias = 0.1;
    int max_iters = 20000;
    double goal_radius = 3.0;
    std::uint64_t seed = 0;
    /// Minimum distance kept from obstacle footprints (KOZs use exact boundaries).
    double clearance = 0.0;
    /// Randomized shortcut passes over the raw tree path; 0 disables smoothing.
    int shortcut_attempts = 64;
};

/// Obstacle-avoiding polyline from `start` to `goal`. Every segment avoids
/// obstacle footprints (inflated by cfg.clearance) and the polygons of KOZs
/// without a time window. The path ends exactly at `goal`. Deterministic for
/// a fixed seed. Throws INVALID_ENDPOINT, NO_PATH.
std::vector<Point2> rrt_plan(const Point2& start, const Point2& goal, std::span<const ExtrudedObstacle> obstacles,
                             std::span<const KeepOutZone> kozs, const RrtConfig& cfg);

/// rrt_plan time-parameterized at constant ground speed starting at
/// `start_time`, yaw aligned with each segment, positions at height `z`.
TimedPath plan_entity_route(const Point2& start, const Point2& goal, std::span<const ExtrudedObstacle> obstacles,
                            const RrtConfig& cfg, double speed = kDefaultCarSpeed, double z = 0.0,
                            double start_time = 0.0);

struct LookGuaranteeOptions {
    double tick_dt = kDefaultTickDt;
    /// Time the UAV keeps holding the vantage after the guarantee time.
    double hold = 2.0;
    int headings = 24;
    /// Fraction of max_speed used for transit legs.
    double speed_fraction = 0.9;
    /// Number of RRT attempts over the best-ranked vantage candidates.
    int max_attempts = 12;
};

struct LookGuaranteePlan {
    TimedPath path;
    /// A tick time at which the target center is inside the camera footprint with clear line of sight.
    double guarantee_time = 0.0;
    Pose vantage;
};

/// UAV path that puts the target (static or moving along its trajectory)
/// inside the camera footprint with a clear line of sight at a tick time.
/// Vantage poses are sampled around the target, filtered by line of sight,
/// obstacles and KOZs, and reached with rrt_plan; the result is KOZ-free
/// (windows respected) and avoids obstacles taller than the flight altitude.
/// Throws NO_VANTAGE.
LookGuaranteePlan plan_look_guarantee_path(const Pose& uav_start, const EntitySpec& target, const CameraModel& cam,
                                           std::span<const ExtrudedObstacle> obstacles,
                                           std::span<const KeepOutZone> kozs, const UavKinematics& kin,
                                           const RrtConfig& cfg, const LookGuaranteeOptions& opts = {});

/// True iff the entity center is inside the footprint of `cam` at `uav` and
/// the line of sight from the UAV to the entity's top center is clear.
bool target_in_view(const Pose& uav, const CameraModel& cam, const BoundingBox3& target_box,
                    std::span<const ExtrudedObstacle> obstacles, bool require_los = true);

struct SweepLeg {
    std::string region;  // AOI id, or "cell[i]" / "cell[i]:revisit" for prior cells
    std::vector<Point3> waypoints;
};

struct SearchPlan {
    double track_spacing = 0.0;
    std::vector<SweepLeg> legs;

    std::vector<Point3> waypoints() const;
};

/// Boustrophedon sweep at `altitude` with lane spacing equal to the
/// footprint width. Without priors each AOI is swept in order; with priors
/// the cells are swept by descending probability and the top cell is swept
/// again at the end. Throws INVALID_CAMERA, MISSING_AOI.
SearchPlan plan_area_search(std::span<const AreaOfInterest> aois, const AreaPriorMap* priors, const CameraModel& cam,
                            double altitude);

/// Lane sweep of a single polygon (lanes along x, alternating direction).
std::vector<Point3> sweep_polygon(const Polygon& poly, double spacing, double altitude);

struct FollowStep {
    Pose pose;
    bool consumed = false;  // the current waypoint was reached this step
};

/// One tick of a deterministic waypoint follower: translate toward the first
/// waypoint at <= max_speed, slew yaw toward the direction of travel at <=
/// max_yaw_rate, and consume the waypoint once within `goal_radius`.
/// Altitude is kept within the kinematic band. Empty list: pose unchanged.
FollowStep follow_waypoints(const Pose& pose, std::span<const Point3> waypoints, const UavKinematics& kin, double dt,
                            double goal_radius = kWaypointGoalRadius);

}  // namespace mforge
