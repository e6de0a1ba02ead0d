#pragma once

namespace mforge {

/// Pinhole camera mounted on the UAV. Angles in degrees; pitch -90 is nadir,
/// mount_yaw is measured counterclockwise from the UAV heading.
struct CameraModel {
    double hfov = 60.0;
    double vfov = 45.0;
    double max_range = 150.0;
    double pitch = -90.0;
    double mount_yaw = 0.0;

    friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

struct UavKinematics {
    double max_speed = 10.0;     // m/s
    double max_yaw_rate = 90.0;  // deg/s
    double z_min = 20.0;
    double z_max = 120.0;

    friend bool operator==(const UavKinematics&, const UavKinematics&) = default;
};

}  // namespace mforge
