#include "mforge/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "mforge/error.hpp"

namespace mforge {

double lerp_yaw(double from, double to, double s) {
    double delta = normalize_deg(to - from);
    if (delta > 180.0) delta -= 360.0;
    return normalize_deg(from + s * delta);
}

TimedPath::TimedPath(std::vector<PathSample> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) throw Error("INVALID_PATH", "path needs at least one sample");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        if (!std::isfinite(s.t) || !is_finite(s.pose.position) || !std::isfinite(s.pose.yaw)) {
            throw Error("INVALID_PATH", "non-finite sample " + std::to_string(i));
        }
        if (i > 0 && !(s.t > samples_[i - 1].t)) {
            throw Error("INVALID_PATH", "sample times must strictly increase at index " + std::to_string(i));
        }
    }
}

Pose TimedPath::pose_at(double t) const {
    if (t <= samples_.front().t) return samples_.front().pose;
    if (t >= samples_.back().t) return samples_.back().pose;
    const auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                                     [](double v, const PathSample& s) { return v < s.t; });
    const PathSample& hi = *it;
    const PathSample& lo = *(it - 1);
    const double s = (t - lo.t) / (hi.t - lo.t);
    const Point3 p = lo.pose.position + (hi.pose.position - lo.pose.position) * s;
    return Pose(p, lerp_yaw(lo.pose.yaw, hi.pose.yaw, s));
}

double TimedPath::length() const {
    double acc = 0.0;
    for (std::size_t i = 1; i < samples_.size(); ++i) {
        acc += distance(samples_[i - 1].pose.position.xy(), samples_[i].pose.position.xy());
    }
    return acc;
}

}  // namespace mforge
