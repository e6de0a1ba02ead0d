#pragma once

#include <span>

#include "mforge/geometry.hpp"

namespace mforge {

/// Area of the intersection of two polygon regions.
double intersection_area(const Polygon& a, const Polygon& b);

/// Round-capped, round-joined buffer of a polyline at distance `radius`. Arc
/// vertices lie on the true circle, spaced so the chord sagitta stays below
/// `max_sagitta`. The outer ring of the largest piece is returned; holes (from
/// self-crossing polylines) are not represented.
Polygon buffer_polyline(std::span<const Point2> polyline, double radius, double max_sagitta);

}  // namespace mforge
