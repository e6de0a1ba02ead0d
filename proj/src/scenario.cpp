#include "mforge/scenario.hpp"

#include <array>
#include <cmath>
#include <set>

#include "mforge/error.hpp"
#include "mforge/polygon_ops.hpp"

namespace mforge {

namespace {

constexpr std::array<std::pair<SpatialOp, std::string_view>, 9> kOpNames = {{
    {SpatialOp::NextTo, "NEXT_TO"},
    {SpatialOp::NotNextTo, "NOT_NEXT_TO"},
    {SpatialOp::OnTopOf, "ON_TOP_OF"},
    {SpatialOp::NotOnTopOf, "NOT_ON_TOP_OF"},
    {SpatialOp::OrthogonalTo, "ORTHOGONAL_TO"},
    {SpatialOp::InFrontOf, "IN_FRONT_OF"},
    {SpatialOp::RightOf, "RIGHT_OF"},
    {SpatialOp::LeftOf, "LEFT_OF"},
    {SpatialOp::PartOf, "PART_OF"},
}};

constexpr std::string_view kEventually = "EVENTUALLY_";

std::string idx(std::string_view base, std::size_t i) {
    return std::string(base) + "[" + std::to_string(i) + "]";
}

void check_window(ValidationReport& r, const std::optional<TimeWindow>& w, const std::string& path) {
    if (!w) return;
    if (!std::isfinite(w->net) || !std::isfinite(w->nlt)) {
        r.add("NON_FINITE", path, "window bounds must be finite");
        return;
    }
    if (w->net < 0.0) r.add("WINDOW_NEGATIVE", path, "net must be >= 0");
    if (w->net > w->nlt) r.add("WINDOW_INVERTED", path, "net exceeds nlt");
}

template <class Zone>
void check_zones(ValidationReport& r, const std::vector<Zone>& zones, std::string_view base) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < zones.size(); ++i) {
        const std::string path = idx(base, i);
        if (zones[i].id.empty()) r.add("EMPTY_FIELD", path + ".id", "id must be non-empty");
        if (!seen.insert(zones[i].id).second) r.add("DUPLICATE_ID", path + ".id", "duplicate id " + zones[i].id);
        check_window(r, zones[i].window, path + ".window");
    }
}

}  // namespace

std::string_view to_string(SpatialOp op) {
    for (const auto& [k, name] : kOpNames) {
        if (k == op) return name;
    }
    return "UNKNOWN";
}

std::string RelationOperator::name() const {
    std::string out;
    for (int i = 0; i < temporal_depth; ++i) out += kEventually;
    out += to_string(op);
    return out;
}

RelationOperator RelationOperator::parse(std::string_view name) {
    RelationOperator out;
    std::string_view rest = name;
    while (rest.substr(0, kEventually.size()) == kEventually) {
        ++out.temporal_depth;
        rest.remove_prefix(kEventually.size());
    }
    for (const auto& [k, n] : kOpNames) {
        if (n == rest) {
            out.op = k;
            return out;
        }
    }
    throw Error("UNKNOWN_OPERATOR", "unknown relation operator '" + std::string(name) + "'");
}

std::string SymbolicRelation::to_string() const {
    std::string out = "[" + related_class + "][" + op.name() + "][" + target_id + "]";
    if (!related_attributes.empty()) {
        out += "[";
        bool first = true;
        for (const auto& [k, v] : related_attributes) {
            if (!first) out += ", ";
            out += k + ": " + v;
            first = false;
        }
        out += "]";
    }
    return out;
}

std::string_view to_string(Objective o) {
    switch (o) {
        case Objective::AreaSearch: return "area_search";
        case Objective::RouteSearch: return "route_search";
        case Objective::MovingTargetPursuit: return "moving_target_pursuit";
    }
    return "unknown";
}

Objective parse_objective(std::string_view s) {
    if (s == "area_search") return Objective::AreaSearch;
    if (s == "route_search") return Objective::RouteSearch;
    if (s == "moving_target_pursuit") return Objective::MovingTargetPursuit;
    throw Error("UNKNOWN_OBJECTIVE", "unknown objective '" + std::string(s) + "'");
}

const EntitySpec* SimulationConfig::find_entity(std::string_view id) const {
    for (const auto& e : entities) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

const EntitySpec* SimulationConfig::target_entity() const {
    for (const auto& e : entities) {
        if (e.is_target) return &e;
    }
    return nullptr;
}

bool ValidationReport::has(std::string_view code) const {
    for (const auto& f : findings) {
        if (f.code == code) return true;
    }
    return false;
}

void ValidationReport::add(std::string code, std::string path, std::string message) {
    findings.push_back({std::move(code), std::move(path), std::move(message)});
}

void ValidationReport::append(const ValidationReport& other) {
    findings.insert(findings.end(), other.findings.begin(), other.findings.end());
}

ValidationReport validate_mission(const MissionDescription& md) {
    ValidationReport r;
    if (md.target.id.empty()) r.add("EMPTY_FIELD", "target.id", "target id must be non-empty");
    if (md.target.class_name.empty()) r.add("EMPTY_FIELD", "target.class", "target class must be non-empty");
    if (!(std::isfinite(md.mission_duration) && md.mission_duration > 0.0)) {
        r.add("DURATION_NONPOSITIVE", "mission_duration", "mission duration must be positive");
    }
    if (md.objective == Objective::AreaSearch && md.aois.empty()) {
        r.add("MISSING_AOI", "aois", "area search requires at least one AOI");
    }
    if (md.objective == Objective::RouteSearch && !md.route) {
        r.add("MISSING_ROUTE", "route", "route search requires a route");
    }
    check_zones(r, md.aois, "aois");
    check_zones(r, md.kozs, "kozs");

    if (md.route) {
        const auto& route = *md.route;
        if (route.polyline.size() < 2) r.add("ROUTE_TOO_SHORT", "route.polyline", "route needs >= 2 points");
        for (std::size_t i = 0; i < route.polyline.size(); ++i) {
            if (!is_finite(route.polyline[i])) r.add("NON_FINITE", idx("route.polyline", i), "non-finite point");
            if (i > 0 && route.polyline[i] == route.polyline[i - 1]) {
                r.add("ROUTE_DUPLICATE_POINT", idx("route.polyline", i), "consecutive points coincide");
            }
        }
        if (!(std::isfinite(route.band_width) && route.band_width > 0.0)) {
            r.add("BAND_WIDTH_NONPOSITIVE", "route.band_width", "band width must be positive");
        }
    }

    if (md.priors) {
        const auto& cells = md.priors->cells;
        double sum = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const double p = cells[i].prob;
            if (!(std::isfinite(p) && p >= 0.0 && p <= 1.0)) {
                r.add("PRIOR_OUT_OF_RANGE", idx("priors.cells", i) + ".prob", "probability outside [0, 1]");
            }
            sum += p;
        }
        if (!(std::fabs(sum - 1.0) <= 1e-9)) {
            r.add("PRIOR_NOT_NORMALIZED", "priors.cells", "probabilities sum to " + std::to_string(sum));
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            for (std::size_t j = i + 1; j < cells.size(); ++j) {
                const double scale = std::min(cells[i].polygon.area(), cells[j].polygon.area());
                if (intersection_area(cells[i].polygon, cells[j].polygon) > 1e-7 * scale + 1e-9) {
                    r.add("PRIOR_CELLS_OVERLAP", idx("priors.cells", i),
                          "cell interiors overlap with cell " + std::to_string(j));
                }
            }
            const double area = cells[i].polygon.area();
            double covered = 0.0;
            for (const auto& aoi : md.aois) covered += intersection_area(cells[i].polygon, aoi.polygon);
            if (covered < area * (1.0 - 1e-7) - 1e-9) {
                r.add("PRIOR_OUTSIDE_AOI", idx("priors.cells", i), "cell is not inside the AOIs");
            }
        }
    }

    for (std::size_t i = 0; i < md.relations.size(); ++i) {
        const auto& rel = md.relations[i];
        const std::string path = idx("relations", i);
        if (rel.related_class.empty()) r.add("EMPTY_FIELD", path + ".related_class", "related class empty");
        if (rel.target_id != md.target.id) {
            r.add("RELATION_TARGET_MISMATCH", path + ".target_id", "relation does not reference the target spec");
        }
        if (rel.op.temporal_depth > 1) r.add("INVALID_NESTING", path + ".operator", "nested temporal operator");
    }
    return r;
}

ValidationReport validate_config(const SimulationConfig& cfg) {
    ValidationReport r;
    std::set<std::string> ids;
    int targets = 0;
    for (std::size_t i = 0; i < cfg.entities.size(); ++i) {
        const auto& e = cfg.entities[i];
        const std::string path = idx("entities", i);
        if (e.id.empty()) r.add("EMPTY_FIELD", path + ".id", "entity id empty");
        if (!ids.insert(e.id).second) r.add("DUPLICATE_ID", path + ".id", "duplicate entity id " + e.id);
        if (e.class_name.empty()) r.add("EMPTY_FIELD", path + ".class", "entity class empty");
        if (e.is_target) ++targets;
        if (e.is_target && e.is_confuser) r.add("TARGET_IS_CONFUSER", path, "entity is both target and confuser");
        if (!is_finite(e.initial_pose.position) || !is_finite(e.bbox.center)) {
            r.add("NON_FINITE", path, "non-finite pose or box");
        }
        if (!(e.bbox.extents.x > 0.0 && e.bbox.extents.y > 0.0 && e.bbox.extents.z > 0.0)) {
            r.add("BBOX_INVALID", path + ".bbox", "extents must be positive");
        }
        if (e.trajectory) {
            const Point3 start = e.trajectory->samples().front().pose.position;
            if (distance(start, e.initial_pose.position) > 1e-6) {
                r.add("TRAJECTORY_START_MISMATCH", path + ".trajectory", "trajectory does not start at initial pose");
            }
        }
    }
    if (targets != 1) r.add("TARGET_COUNT", "entities", "exactly one target entity required");
    for (std::size_t i = 0; i < cfg.obstacles.size(); ++i) {
        if (!(std::isfinite(cfg.obstacles[i].height) && cfg.obstacles[i].height >= 0.0)) {
            r.add("OBSTACLE_INVALID", idx("obstacles", i) + ".height", "height must be >= 0");
        }
    }
    const auto& env = cfg.environment;
    const std::pair<const char*, double> unit_fields[] = {
        {"snow", env.snow}, {"rain", env.rain}, {"fog", env.fog}, {"wind_speed_norm", env.wind_speed_norm},
        {"foliage", env.foliage}, {"camera_noise", env.camera_noise},
    };
    for (const auto& [name, v] : unit_fields) {
        if (!(v >= 0.0 && v <= 1.0)) r.add("ENV_OUT_OF_RANGE", std::string("environment.") + name, "outside [0, 1]");
    }
    if (!std::isfinite(env.wind_direction)) r.add("ENV_OUT_OF_RANGE", "environment.wind_direction", "non-finite");
    if (!(env.time_of_day >= 0.0 && env.time_of_day < 24.0)) {
        r.add("ENV_OUT_OF_RANGE", "environment.time_of_day", "outside [0, 24)");
    }
    if (cfg.cameras.empty()) r.add("NO_CAMERA", "cameras", "at least one camera required");
    for (std::size_t i = 0; i < cfg.cameras.size(); ++i) {
        const auto& c = cfg.cameras[i];
        const bool ok = c.hfov > 0.0 && c.hfov < 180.0 && c.vfov > 0.0 && c.vfov < 180.0 && c.max_range > 0.0 &&
                        c.pitch >= -90.0 && c.pitch <= 90.0 && std::isfinite(c.mount_yaw);
        if (!ok) r.add("CAMERA_INVALID", idx("cameras", i), "camera parameters out of range");
    }
    const auto& k = cfg.uav_kinematics;
    if (!(k.max_speed > 0.0 && k.max_yaw_rate > 0.0 && k.z_min > 0.0 && k.z_min <= k.z_max)) {
        r.add("KINEMATICS_INVALID", "uav_kinematics", "limits must be positive with z_min <= z_max");
    }
    if (!is_finite(cfg.uav_start.position)) r.add("NON_FINITE", "uav_start", "non-finite UAV start");
    if (!(std::isfinite(cfg.tick_dt) && cfg.tick_dt > 0.0)) r.add("TICK_DT_NONPOSITIVE", "tick_dt", "tick_dt must be > 0");
    return r;
}

ValidationReport validate_pair(const MissionDescription& md, const SimulationConfig& cfg) {
    ValidationReport r = validate_mission(md);
    r.append(validate_config(cfg));
    const EntitySpec* target = cfg.target_entity();
    if (target && (target->id != md.target.id || target->class_name != md.target.class_name)) {
        r.add("TARGET_MISMATCH", "entities", "target entity does not match the mission target spec");
    }
    return r;
}

Polygon route_band(const RouteOfInterest& route, double max_sagitta) {
    if (route.polyline.size() < 2) throw Error("INVALID_ROUTE", "route needs >= 2 points");
    for (std::size_t i = 1; i < route.polyline.size(); ++i) {
        if (route.polyline[i] == route.polyline[i - 1]) throw Error("INVALID_ROUTE", "consecutive points coincide");
    }
    if (!(route.band_width > 0.0)) throw Error("INVALID_ROUTE", "band width must be positive");
    return buffer_polyline(route.polyline, 0.5 * route.band_width, max_sagitta);
}

}  // namespace mforge
