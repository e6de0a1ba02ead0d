#pragma once

#include <string>
#include <string_view>

#include "mforge/json_io.hpp"
#include "mforge/scenario.hpp"

namespace mforge {

// Building blocks shared by every document format.
Json to_json(const Point2& p);
Json to_json(const Point3& p);
Json to_json(const Polygon& p);
Json to_json(const Pose& p);
Json to_json(const BoundingBox3& b);
Json to_json(const ExtrudedObstacle& o);
Json to_json(const TimedPath& path);
Json to_json(const SymbolicRelation& r);
Json to_json(const CameraModel& c);
Json to_json(const Attributes& a);

Point2 point2_from_json(const Json& j, const std::string& path);
Point3 point3_from_json(const Json& j, const std::string& path);
Polygon polygon_from_json(const Json& j, const std::string& path);
Pose pose_from_json(const Json& j, const std::string& path);
BoundingBox3 bbox_from_json(const Json& j, const std::string& path);
ExtrudedObstacle obstacle_from_json(const Json& j, const std::string& path);
TimedPath timed_path_from_json(const Json& j, const std::string& path);
SymbolicRelation relation_from_json(const Json& j, const std::string& path);
CameraModel camera_from_json(const Json& j, const std::string& path);
Attributes attributes_from_json(const Json& j, const std::string& path);

Json mission_to_json(const MissionDescription& md);
MissionDescription mission_from_json(const Json& j);
Json config_to_json(const SimulationConfig& cfg);
SimulationConfig config_from_json(const Json& j);

/// Canonical `mission.json` bytes. Throws INVALID_DOCUMENT when validation fails.
std::string serialize(const MissionDescription& md);
/// Canonical `sim_config.json` bytes. Throws INVALID_DOCUMENT when validation fails.
std::string serialize(const SimulationConfig& cfg);
/// Standalone path document: {"schema_version", "samples": [...]}.
std::string serialize(const TimedPath& path);

MissionDescription deserialize_mission(std::string_view bytes);
SimulationConfig deserialize_config(std::string_view bytes);
TimedPath deserialize_path(std::string_view bytes);

}  // namespace mforge
