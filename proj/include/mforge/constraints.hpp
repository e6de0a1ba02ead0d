#pragma once

#include <span>
#include <string>
#include <vector>

#include "mforge/scenario.hpp"
#include "mforge/trajectory.hpp"

namespace mforge {

struct Violation {
    std::string koz_id;
    double enter_t = 0.0;
    double exit_t = 0.0;
    Point2 witness_point;

    double duration() const { return exit_t - enter_t; }
    friend bool operator==(const Violation&, const Violation&) = default;
};

/// Closed time intervals during which the path's plan-view position lies in
/// `poly`, ignoring any window. Intervals touching across samples are merged.
std::vector<std::pair<double, double>> occupancy_intervals(const TimedPath& path, const Polygon& poly);

/// One violation per maximal interval in which the path is inside an active
/// KOZ (window bounds inclusive). Plan-view only: altitude never exempts.
/// Sorted by enter time, then by KOZ order.
std::vector<Violation> koz_violations(const TimedPath& path, std::span<const KeepOutZone> kozs);

bool aoi_active(const AreaOfInterest& aoi, double t);

/// KOZ covering `street` from first entry - pad to last exit + pad (clamped
/// at 0). Throws NO_INTERSECTION when the trajectory never enters the street.
KeepOutZone street_denial_koz(const Polygon& street, const TimedPath& traj, double pad = 0.0,
                              std::string id = "street_denial");

/// Probability of the first cell containing p (boundary-inclusive), else 0.
double prior_lookup(const AreaPriorMap& priors, const Point2& p);
/// Index of the first cell containing p, or -1.
int prior_cell_index(const AreaPriorMap& priors, const Point2& p);

}  // namespace mforge
