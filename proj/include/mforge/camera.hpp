#pragma once

#include <optional>

#include "mforge/geometry.hpp"
#include "mforge/payload.hpp"

namespace mforge {

/// Plan-view ground footprint of the camera frustum at the given UAV pose:
/// the four corner rays intersected with z = 0 and clipped to the disk of
/// ground points within slant range max_range. Rays at or above the horizon
/// are extended to the disk edge. Throws EMPTY_FOOTPRINT when the optical axis
/// does not reach the ground (pitch >= 0), the UAV is not above ground, or
/// the UAV is higher than max_range.
Polygon camera_footprint(const Pose& uav, const CameraModel& cam);
std::optional<Polygon> try_camera_footprint(const Pose& uav, const CameraModel& cam);

/// Cross-track width of the footprint for a UAV flying along +x at `altitude`.
double footprint_width(const CameraModel& cam, double altitude);

}  // namespace mforge
