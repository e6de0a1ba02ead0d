#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mforge/json_io.hpp"
#include "mforge/relations.hpp"
#include "mforge/scenario.hpp"

namespace mforge {

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    friend bool operator==(const Range&, const Range&) = default;
};

struct IntRange {
    int lo = 0;
    int hi = 0;

    friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct EnvironmentRanges {
    Range snow, rain, fog, wind_speed_norm, foliage, camera_noise;
    Range wind_direction{0.0, 360.0};
    Range time_of_day{6.0, 18.0};

    friend bool operator==(const EnvironmentRanges&, const EnvironmentRanges&) = default;
};

/// A sampled object class: box size (full lengths, meters) and attribute pools.
struct ClassSpec {
    std::string class_name;
    Point3 size;
    std::map<std::string, std::vector<std::string>> attribute_pools;

    friend bool operator==(const ClassSpec&, const ClassSpec&) = default;
};

struct ScenarioTemplate {
    std::string name;
    Polygon world = Polygon::rectangle(0.0, 0.0, 400.0, 400.0);
    std::vector<ExtrudedObstacle> obstacles;
    /// Street polygons: spawn areas for vehicles and the source of street-denial KOZs.
    std::vector<Polygon> streets;
    std::vector<Objective> objectives;
    std::vector<ClassSpec> target_classes;
    std::vector<ClassSpec> landmark_classes;
    IntRange confusers{2, 4};
    /// Number of landmarks placed next to the target at anchor bearings.
    IntRange signature_landmarks{1, 2};
    IntRange relations{1, 3};
    IntRange kozs{0, 2};
    IntRange street_denial_kozs{1, 2};
    EnvironmentRanges environment;
    Polygon uav_start_region = Polygon::rectangle(0.0, 0.0, 400.0, 400.0);
    Range uav_altitude{25.0, 60.0};
    UavKinematics uav_kinematics;
    std::vector<CameraModel> camera_pool;
    IntRange cameras{1, 1};
    int aoi_depth = 1;
    Range aoi_size{120.0, 240.0};
    Range koz_size{20.0, 60.0};
    double min_confuser_separation = 30.0;
    double min_route_length = 120.0;
    double route_band_width = 30.0;
    double car_speed = 8.0;
    double mission_duration = kDefaultMissionDuration;
    double tick_dt = kDefaultTickDt;
    RelationParams relation_params;

    friend bool operator==(const ScenarioTemplate&, const ScenarioTemplate&) = default;
};

ValidationReport validate_template(const ScenarioTemplate& tpl);
Json template_to_json(const ScenarioTemplate& tpl);
ScenarioTemplate template_from_json(const Json& j);
ScenarioTemplate deserialize_template(std::string_view bytes);
std::string serialize(const ScenarioTemplate& tpl);

/// 400 m x 400 m suburban street grid with houses and trees.
ScenarioTemplate suburban_grid_template(Objective objective = Objective::AreaSearch);

struct ScenarioPair {
    MissionDescription mission;
    SimulationConfig config;
};

/// Maximum placement attempts before SAMPLING_EXHAUSTED.
inline constexpr int kMaxSamplingRetries = 100;

/// Deterministic scenario for (template, seed). Both documents validate,
/// the target lies in the highest-prior cell, and the emitted relations
/// rank the target strictly first among the look-alike cars. Throws
/// INVALID_TEMPLATE, SAMPLING_EXHAUSTED.
ScenarioPair sample_scenario(const ScenarioTemplate& tpl, std::uint64_t seed);

/// Quadtree split of the AOI bounding box to `depth` (4^depth cells), cells
/// clipped to the AOI with empty ones dropped, Dirichlet(1, ..., 1)
/// probabilities and the maximum moved to the cell containing `target`.
/// Throws INVALID_TARGET, NONCONVEX_AOI, INVALID_DEPTH.
AreaPriorMap decompose_aoi(const AreaOfInterest& aoi, int depth, const Point2& target, std::uint64_t seed);

struct ManifestEntry {
    std::string id;
    std::uint64_t seed = 0;
    std::string mission_path;
    std::string config_path;
    std::string content_hash;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct ManifestFailure {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::string reason;

    friend bool operator==(const ManifestFailure&, const ManifestFailure&) = default;
};

struct DatasetManifest {
    std::uint64_t base_seed = 0;
    std::string template_hash;
    std::vector<ManifestEntry> entries;
    std::vector<ManifestFailure> failures;

    Json to_json() const;
    static DatasetManifest from_json(const Json& j);
    /// SHA-256 of the canonical manifest document.
    std::string hash() const;
};

/// Per-item seed for item `index`, attempt `attempt`.
std::uint64_t item_seed(std::uint64_t base_seed, std::size_t index, std::uint64_t attempt);
/// SHA-256 over the mission bytes followed by the config bytes.
std::string content_hash(const std::string& mission_bytes, const std::string& config_bytes);

/// Writes `out_dir/<id>/mission.json`, `out_dir/<id>/sim_config.json` and
/// `out_dir/manifest.json`. Output is independent of `workers`. Throws
/// IO_ERROR when the directory cannot be written.
DatasetManifest generate_dataset(const ScenarioTemplate& tpl, std::size_t n, std::uint64_t base_seed,
                                 const std::filesystem::path& out_dir, unsigned workers = 1);

}  // namespace mforge
