#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mforge/constraints.hpp"
#include "mforge/json_io.hpp"
#include "mforge/relations.hpp"
#include "mforge/scenario.hpp"

namespace mforge {

/// Tunable stand-ins for weather and sensor effects. All run-time constants
/// of the degradation model live here.
struct DegradationProfile {
    double range_loss = 0.7;       // effective_range = max_range * (1 - range_loss * max(snow, rain, fog))
    double noise_weight = 0.5;     // weight of camera_noise in the corruption probability
    double weather_weight = 0.3;   // weight of max(snow, rain, fog) in the corruption probability
    double wind_speed_max = 3.0;   // drift speed in m/s at wind_speed_norm = 1
};

double weather_severity(const EnvironmentConditions& env);
double effective_range(const CameraModel& cam, const EnvironmentConditions& env, const DegradationProfile& profile = {});
double corruption_probability(const EnvironmentConditions& env, const DegradationProfile& profile = {});
/// Plan-view displacement caused by wind over `dt` seconds.
Point2 wind_drift(const EnvironmentConditions& env, double dt, const DegradationProfile& profile = {});

struct UavCommand {
    enum class Kind { Hover, Waypoints, Velocity, Track };
    Kind kind = Kind::Hover;
    std::vector<Point3> waypoints;  // Waypoints: replaces the queue
    Point3 velocity;                // Velocity: m/s, magnitude clamped to max_speed
    std::optional<TimedPath> track; // Track: the UAV pose follows the path exactly (no wind)

    static UavCommand hover() { return {}; }
    static UavCommand goto_waypoints(std::vector<Point3> wps);
    static UavCommand fly_velocity(const Point3& v);
    static UavCommand follow_track(TimedPath path);
};

std::string_view to_string(UavCommand::Kind k);

/// An interval of KOZ occupancy that is still growing at the current tick.
struct OpenViolation {
    std::string koz_id;
    double enter_t = 0.0;
    double exit_t = 0.0;
    Point2 witness;  // a plan-view point inside the KOZ during the interval
};

struct WorldState {
    std::uint64_t tick = 0;
    double time = 0.0;
    double tick_dt = kDefaultTickDt;
    std::uint64_t seed = 0;
    std::vector<SceneEntity> entities;
    Pose uav;
    UavCommand control;
    std::vector<OpenViolation> open_violations;
};

/// World at t = 0 with entities at their initial poses and the UAV at
/// uav_start. Throws INVALID_DOCUMENT when the config does not validate.
WorldState init_world(const SimulationConfig& cfg);
/// SHA-256 of the canonical form of the world state.
std::string state_hash(const WorldState& world);

/// Advances the world by one tick. A present `command` replaces the active
/// control before moving. The UAV follows the active control (waypoint
/// follower, velocity or hover plus wind drift; tracks are replayed exactly)
/// and entities take their trajectory poses at the new time. Returns the KOZ
/// violations that were closed during this tick; intervals still open remain
/// in the world state.
std::vector<Violation> step(WorldState& world, const SimulationConfig& cfg, std::span<const KeepOutZone> kozs,
                            const std::optional<UavCommand>& command = std::nullopt,
                            const DegradationProfile& profile = {});

/// Closes every open KOZ interval (end of mission).
std::vector<Violation> close_violations(WorldState& world);

struct Detection {
    std::string detection_id;
    int camera = 0;
    std::string observed_class;
    Attributes observed_attributes;
    Point2 position_estimate;
    std::string true_entity_id;  // ground truth; never sent to clients
    double confidence = 1.0;

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// Geometric detectability of one entity by one camera: center inside the
/// footprint, slant range to the bbox center within `range`, and clear line
/// of sight from the UAV to the top center.
bool detectable(const Pose& uav, const CameraModel& cam, const SceneEntity& e,
                std::span<const ExtrudedObstacle> obstacles, double range);

/// Detections of all non-group entities for camera `camera_index`, with
/// attributes corrupted by the counter-keyed random stream.
std::vector<Detection> detect(const WorldState& world, const CameraModel& cam, int camera_index,
                              const EnvironmentConditions& env, std::span<const ExtrudedObstacle> obstacles,
                              const DegradationProfile& profile = {});

/// Decoy value used in place of a corrupted attribute.
std::string decoy_value(const std::string& key, const std::string& true_value, double u);

struct GroundTruthReport {
    std::string entity_id;
    Pose pose;
    Point3 center;
    double time = 0.0;

    friend bool operator==(const GroundTruthReport&, const GroundTruthReport&) = default;
};

/// Ground-truth report for `target_id` when its center lies in at least one
/// camera footprint (and, if `require_los`, the line of sight is clear).
std::optional<GroundTruthReport> perfect_perception_report(const WorldState& world,
                                                           std::span<const CameraModel> cams,
                                                           const std::string& target_id,
                                                           std::span<const ExtrudedObstacle> obstacles,
                                                           bool require_los = true);

/// True when the entity center is inside the footprint of any camera (no LOS test).
bool in_any_footprint(const Pose& uav, std::span<const CameraModel> cams, const SceneEntity& e);

enum class MissionThread { Perception, Maneuver };
std::string_view to_string(MissionThread t);
MissionThread parse_thread(std::string_view s);

enum class RunStatus { Completed, Stopped, ClientError };
std::string_view to_string(RunStatus s);
RunStatus parse_status(std::string_view s);

struct TickEvent {
    std::uint64_t tick = 0;
    double time = 0.0;
    Pose uav;
    bool target_in_view = false;
    bool in_aoi = false;
};
struct DetectionEvent {
    std::uint64_t tick = 0;
    double time = 0.0;
    Detection detection;
};
struct ReportEvent {
    std::uint64_t tick = 0;
    double time = 0.0;
    GroundTruthReport report;
};
struct ViolationEvent {
    std::uint64_t tick = 0;
    double time = 0.0;
    Violation violation;
};
struct CommandEvent {
    std::uint64_t tick = 0;
    double time = 0.0;
    UavCommand command;
};
struct DeclarationEvent {
    std::uint64_t tick = 0;
    double time = 0.0;
    std::string source;  // "client" or "baseline"
    std::string detection_id;
    std::string entity_id;
};

using MissionEvent = std::variant<TickEvent, DetectionEvent, ReportEvent, ViolationEvent, CommandEvent, DeclarationEvent>;

Json to_json(const MissionEvent& e);
MissionEvent event_from_json(const Json& j, const std::string& path);
Json to_json(const UavCommand& c);
UavCommand command_from_json(const Json& j, const std::string& path);
Json to_json(const Detection& d);
Json to_json(const GroundTruthReport& r);

struct MissionLog {
    std::string mission_hash;
    std::string config_hash;
    std::uint64_t seed = 0;
    MissionThread thread = MissionThread::Perception;
    double tick_dt = kDefaultTickDt;
    std::vector<MissionEvent> events;
    RunStatus status = RunStatus::Completed;
    std::string error;

    Json header() const;
    /// One canonical line per event preceded by the header line.
    std::string to_jsonl() const;
    static MissionLog from_jsonl(std::string_view text);
    /// SHA-256 of to_jsonl().
    std::string hash() const;
};

/// What the policy sees at a tick. Detections still carry ground truth;
/// transports must strip it before handing them to external clients.
struct TickObservation {
    std::uint64_t tick = 0;
    double time = 0.0;
    Pose uav;
    std::vector<Detection> detections;
    std::optional<GroundTruthReport> report;
};

struct PolicyAction {
    std::optional<UavCommand> command;
    std::optional<std::string> declare_detection_id;
    bool stop = false;
};

/// Decision maker driving the UAV. Commands returned at tick k take effect
/// in the step from k to k + 1. Throwing Error("CLIENT_ERROR", ...) ends the
/// run with status CLIENT_ERROR.
class Policy {
public:
    virtual ~Policy() = default;
    virtual void begin(const MissionDescription&, const SimulationConfig&, MissionThread) {}
    /// Called for every tick including the last, before on_tick.
    virtual void observe(const TickObservation&) {}
    virtual PolicyAction on_tick(const TickObservation& obs) = 0;
    virtual void end(RunStatus) {}
};

/// Replays a precomputed path (issued as a Track command at tick 0).
class ScriptedPathPolicy : public Policy {
public:
    explicit ScriptedPathPolicy(TimedPath path) : path_(std::move(path)) {}
    PolicyAction on_tick(const TickObservation& obs) override;

private:
    TimedPath path_;
};

/// Sends a fixed waypoint list at tick 0 and then lets the follower fly it.
class WaypointPolicy : public Policy {
public:
    explicit WaypointPolicy(std::vector<Point3> waypoints) : waypoints_(std::move(waypoints)) {}
    PolicyAction on_tick(const TickObservation& obs) override;

private:
    std::vector<Point3> waypoints_;
};

/// Never commands anything; the UAV hovers.
class NoOpPolicy : public Policy {
public:
    PolicyAction on_tick(const TickObservation&) override { return {}; }
};

struct RunOptions {
    MissionThread thread = MissionThread::Perception;
    bool perfect_perception_los = true;
    std::optional<std::uint64_t> seed_override;
    DegradationProfile profile;
    /// Declare the best-ranked detected candidate at the end when the policy did not declare.
    bool baseline_declaration = true;
};

/// Ticks 0..round(mission_duration / tick_dt). Perception thread: detections
/// are produced; maneuver thread: perfect-perception reports are produced.
/// Throws INVALID_DOCUMENT when the documents do not validate as a pair.
MissionLog run_mission(const MissionDescription& md, const SimulationConfig& cfg, Policy& policy,
                       const RunOptions& options = {});

/// Candidate entity chosen by relation-based disambiguation over the target
/// class/attribute matches among the detections; empty when none match.
std::optional<DeclarationEvent> baseline_declaration(const MissionDescription& md, const SimulationConfig& cfg,
                                                     std::span<const Detection> detections);

}  // namespace mforge
