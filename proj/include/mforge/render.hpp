#pragma once

#include <optional>
#include <string>

#include "mforge/scenario.hpp"
#include "mforge/sim.hpp"

namespace mforge {

struct RenderOptions {
    /// Pixels per meter.
    double scale = 2.0;
    /// Margin around the scene bounds, meters.
    double margin = 10.0;
};

/// Plan-view SVG of the scenario: obstacles, AOIs with one shaded element
/// per prior cell, route and search band, KOZs, entity trajectories and,
/// when a log is given, the UAV track. Output bytes depend only on the inputs.
std::string render_scene(const MissionDescription& md, const SimulationConfig& cfg,
                         const std::optional<MissionLog>& log = std::nullopt, const RenderOptions& options = {});

}  // namespace mforge
