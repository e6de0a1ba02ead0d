#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mforge/geometry.hpp"
#include "mforge/payload.hpp"
#include "mforge/trajectory.hpp"

namespace mforge {

using Attributes = std::map<std::string, std::string>;

inline constexpr const char* kSchemaVersion = "1";
inline constexpr double kDefaultMissionDuration = 600.0;
inline constexpr double kDefaultTickDt = 0.1;

/// Active interval [net, nlt] in mission seconds (no-earlier-than, no-later-than).
struct TimeWindow {
    double net = 0.0;
    double nlt = 0.0;

    bool contains(double t) const { return net <= t && t <= nlt; }
    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// Soft constraint: where the target is expected. No window means always active.
struct AreaOfInterest {
    std::string id;
    Polygon polygon;
    std::optional<TimeWindow> window;

    friend bool operator==(const AreaOfInterest&, const AreaOfInterest&) = default;
};

/// Hard constraint: the UAV plan-view path must not enter the polygon while active.
struct KeepOutZone {
    std::string id;
    Polygon polygon;
    std::optional<TimeWindow> window;

    bool active_at(double t) const { return !window || window->contains(t); }
    friend bool operator==(const KeepOutZone&, const KeepOutZone&) = default;
};

struct PriorCell {
    Polygon polygon;
    double prob = 0.0;

    friend bool operator==(const PriorCell&, const PriorCell&) = default;
};

/// Per-cell probability that the cell contains the target.
struct AreaPriorMap {
    std::vector<PriorCell> cells;

    friend bool operator==(const AreaPriorMap&, const AreaPriorMap&) = default;
};

struct RouteOfInterest {
    std::vector<Point2> polyline;
    double band_width = 0.0;

    friend bool operator==(const RouteOfInterest&, const RouteOfInterest&) = default;
};

enum class SpatialOp {
    NextTo,
    NotNextTo,
    OnTopOf,
    NotOnTopOf,
    OrthogonalTo,
    InFrontOf,
    RightOf,
    LeftOf,
    PartOf,
};

inline constexpr SpatialOp kAllSpatialOps[] = {
    SpatialOp::NextTo,  SpatialOp::NotNextTo, SpatialOp::OnTopOf, SpatialOp::NotOnTopOf, SpatialOp::OrthogonalTo,
    SpatialOp::InFrontOf, SpatialOp::RightOf, SpatialOp::LeftOf,  SpatialOp::PartOf,
};

std::string_view to_string(SpatialOp op);

/// A relation operator: a spatial/membership operator optionally wrapped in
/// EVENTUALLY_. Only depth 0 and 1 are meaningful; deeper nesting parses so
/// that validation and evaluation can report INVALID_NESTING.
struct RelationOperator {
    SpatialOp op = SpatialOp::NextTo;
    int temporal_depth = 0;

    bool eventually() const { return temporal_depth > 0; }
    std::string name() const;
    /// Throws UNKNOWN_OPERATOR.
    static RelationOperator parse(std::string_view name);

    friend bool operator==(const RelationOperator&, const RelationOperator&) = default;
    friend auto operator<=>(const RelationOperator& a, const RelationOperator& b) {
        return a.name() <=> b.name();
    }
};

/// [related_class][operator][target_id][related_attributes]
struct SymbolicRelation {
    std::string related_class;
    RelationOperator op;
    std::string target_id;
    Attributes related_attributes;

    std::string to_string() const;
    friend bool operator==(const SymbolicRelation&, const SymbolicRelation&) = default;
};

enum class Objective { AreaSearch, RouteSearch, MovingTargetPursuit };

std::string_view to_string(Objective o);
Objective parse_objective(std::string_view s);

struct TargetSpec {
    std::string id;
    std::string class_name;
    Attributes attributes;

    friend bool operator==(const TargetSpec&, const TargetSpec&) = default;
};

struct MissionDescription {
    Objective objective = Objective::AreaSearch;
    TargetSpec target;
    std::vector<AreaOfInterest> aois;
    std::optional<RouteOfInterest> route;
    std::vector<KeepOutZone> kozs;
    std::optional<AreaPriorMap> priors;
    std::vector<SymbolicRelation> relations;
    double mission_duration = kDefaultMissionDuration;

    friend bool operator==(const MissionDescription&, const MissionDescription&) = default;
};

struct EntitySpec {
    std::string id;
    std::string class_name;
    Attributes attributes;
    Pose initial_pose;
    BoundingBox3 bbox;  // world frame at the initial pose
    std::optional<TimedPath> trajectory;
    bool is_target = false;
    bool is_confuser = false;

    friend bool operator==(const EntitySpec&, const EntitySpec&) = default;
};

/// Normalized environment intensities in [0, 1]; wind_direction in degrees
/// (direction the wind blows toward, counterclockwise from east).
struct EnvironmentConditions {
    double snow = 0.0;
    double rain = 0.0;
    double fog = 0.0;
    double wind_speed_norm = 0.0;
    double foliage = 0.0;
    double camera_noise = 0.0;
    double wind_direction = 0.0;
    double time_of_day = 12.0;

    friend bool operator==(const EnvironmentConditions&, const EnvironmentConditions&) = default;
};

struct SimulationConfig {
    std::vector<EntitySpec> entities;
    std::vector<ExtrudedObstacle> obstacles;
    EnvironmentConditions environment;
    Pose uav_start;
    UavKinematics uav_kinematics;
    std::vector<CameraModel> cameras;
    std::uint64_t seed = 0;
    double tick_dt = kDefaultTickDt;

    const EntitySpec* find_entity(std::string_view id) const;
    const EntitySpec* target_entity() const;

    friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

struct Finding {
    std::string code;
    std::string path;
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;

    bool ok() const { return findings.empty(); }
    bool has(std::string_view code) const;
    void add(std::string code, std::string path, std::string message);
    void append(const ValidationReport& other);
};

ValidationReport validate_mission(const MissionDescription& md);
ValidationReport validate_config(const SimulationConfig& cfg);
/// Both documents plus cross-document consistency (target entity matches the target spec).
ValidationReport validate_pair(const MissionDescription& md, const SimulationConfig& cfg);

/// Points within band_width / 2 of the route polyline, with round joins and
/// caps. Arc vertices lie on the exact boundary with chord error below
/// `max_sagitta` meters. Throws INVALID_ROUTE for degenerate routes.
Polygon route_band(const RouteOfInterest& route, double max_sagitta = 1e-6);

}  // namespace mforge
