#pragma once

#include <vector>

#include "mforge/geometry.hpp"

namespace mforge {

struct PathSample {
    double t = 0.0;
    Pose pose;

    friend bool operator==(const PathSample&, const PathSample&) = default;
};

/// Time-stamped pose sequence. Samples have strictly increasing times; the
/// pose between samples is the linear interpolation of position and the
/// shortest-arc interpolation of yaw. Outside [start_time, end_time] the
/// path holds its end poses.
class TimedPath {
public:
    /// Throws INVALID_PATH on empty input, non-increasing or non-finite times.
    explicit TimedPath(std::vector<PathSample> samples);

    const std::vector<PathSample>& samples() const { return samples_; }
    double start_time() const { return samples_.front().t; }
    double end_time() const { return samples_.back().t; }
    Pose pose_at(double t) const;
    /// Plan-view polyline length.
    double length() const;

    friend bool operator==(const TimedPath&, const TimedPath&) = default;

private:
    std::vector<PathSample> samples_;
};

/// Yaw interpolation along the shorter arc, result in [0, 360).
double lerp_yaw(double from, double to, double s);

}  // namespace mforge
