#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "mforge/json_io.hpp"
#include "mforge/scenario.hpp"
#include "mforge/sim.hpp"

namespace mforge {

struct MetricsReport {
    bool target_detected = false;
    bool correct_disambiguation = false;
    std::optional<double> time_to_first_detection;
    std::size_t koz_violation_count = 0;
    double koz_violation_duration = 0.0;
    double pursuit_in_view_fraction = 0.0;
    double aoi_dwell_fraction = 0.0;
    /// Hard-constraint outcome: any KOZ violation fails the mission.
    bool mission_failed = false;
    std::optional<std::string> declared_entity;
    RunStatus status = RunStatus::Completed;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

Json to_json(const MetricsReport& r);
MetricsReport metrics_from_json(const Json& j, const std::string& path = "");

/// Pure function of (log, mission). Throws INCOMPATIBLE_INPUTS when the log
/// was recorded for a different mission document.
MetricsReport score_mission(const MissionLog& log, const MissionDescription& md);

}  // namespace mforge
