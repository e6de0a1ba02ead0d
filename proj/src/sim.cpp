#include "mforge/sim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "mforge/camera.hpp"
#include "mforge/codec.hpp"
#include "mforge/error.hpp"
#include "mforge/hashing.hpp"
#include "mforge/planning.hpp"
#include "mforge/rng.hpp"

namespace mforge {

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

[[noreturn]] void throw_findings(const ValidationReport& rep) {
    const auto& f = rep.findings.front();
    throw Error("INVALID_DOCUMENT", f.code + ": " + f.message, f.path);
}

const SceneEntity* find_entity(const WorldState& world, std::string_view id) {
    for (const auto& e : world.entities) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

double slew_yaw(double current, double desired, double max_turn) {
    double delta = normalize_deg(desired - current);
    if (delta > 180.0) delta -= 360.0;
    return normalize_deg(current + std::clamp(delta, -max_turn, max_turn));
}

const std::vector<std::string> kColorPool = {"black", "blue", "gray", "green", "red", "silver", "white"};
const std::vector<std::string> kModelPool = {"coupe", "hatchback", "pickup", "sedan", "suv", "van"};

}  // namespace

double weather_severity(const EnvironmentConditions& env) { return std::max({env.snow, env.rain, env.fog}); }

double effective_range(const CameraModel& cam, const EnvironmentConditions& env, const DegradationProfile& profile) {
    return cam.max_range * (1.0 - profile.range_loss * weather_severity(env));
}

double corruption_probability(const EnvironmentConditions& env, const DegradationProfile& profile) {
    return std::clamp(profile.noise_weight * env.camera_noise + profile.weather_weight * weather_severity(env), 0.0, 1.0);
}

Point2 wind_drift(const EnvironmentConditions& env, double dt, const DegradationProfile& profile) {
    const double d = env.wind_speed_norm * profile.wind_speed_max * dt;
    const double a = deg2rad(env.wind_direction);
    return {d * std::cos(a), d * std::sin(a)};
}

UavCommand UavCommand::goto_waypoints(std::vector<Point3> wps) {
    UavCommand c;
    c.kind = Kind::Waypoints;
    c.waypoints = std::move(wps);
    return c;
}

UavCommand UavCommand::fly_velocity(const Point3& v) {
    UavCommand c;
    c.kind = Kind::Velocity;
    c.velocity = v;
    return c;
}

UavCommand UavCommand::follow_track(TimedPath path) {
    UavCommand c;
    c.kind = Kind::Track;
    c.track = std::move(path);
    return c;
}

std::string_view to_string(UavCommand::Kind k) {
    switch (k) {
        case UavCommand::Kind::Hover: return "hover";
        case UavCommand::Kind::Waypoints: return "waypoints";
        case UavCommand::Kind::Velocity: return "velocity";
        case UavCommand::Kind::Track: return "track";
    }
    return "hover";
}

WorldState init_world(const SimulationConfig& cfg) {
    const auto rep = validate_config(cfg);
    if (!rep.ok()) throw_findings(rep);
    WorldState w;
    w.tick_dt = cfg.tick_dt;
    w.seed = cfg.seed;
    w.uav = cfg.uav_start;
    for (const auto& e : cfg.entities) w.entities.push_back(entity_state_at(e, 0.0));
    return w;
}

std::string state_hash(const WorldState& world) {
    Json ents = Json::array();
    for (const auto& e : world.entities) {
        ents.push_back(Json{{"id", e.id}, {"pose", to_json(e.pose)}, {"bbox", to_json(e.bbox)}});
    }
    Json open = Json::array();
    for (const auto& v : world.open_violations) open.push_back(Json{{"koz_id", v.koz_id}, {"enter_t", v.enter_t}, {"exit_t", v.exit_t}});
    const Json j{{"tick", world.tick},     {"time", world.time},           {"tick_dt", world.tick_dt},
                 {"seed", world.seed},     {"entities", ents},             {"uav", to_json(world.uav)},
                 {"control", to_json(world.control)}, {"open_violations", open}};
    return sha256_hex(canonical_line(j));
}

std::vector<Violation> step(WorldState& world, const SimulationConfig& cfg, std::span<const KeepOutZone> kozs,
                            const std::optional<UavCommand>& command, const DegradationProfile& profile) {
    if (command) world.control = *command;
    const double dt = world.tick_dt;
    const Pose before = world.uav;
    const double t0 = world.time;
    world.tick += 1;
    world.time = static_cast<double>(world.tick) * dt;

    const UavKinematics& kin = cfg.uav_kinematics;
    UavCommand& ctl = world.control;
    Pose next = before;
    switch (ctl.kind) {
        case UavCommand::Kind::Track:
            next = ctl.track->pose_at(world.time);
            break;
        case UavCommand::Kind::Waypoints: {
            if (!ctl.waypoints.empty()) {
                const FollowStep fs = follow_waypoints(before, ctl.waypoints, kin, dt);
                next = fs.pose;
                if (fs.consumed) ctl.waypoints.erase(ctl.waypoints.begin());
            }
            break;
        }
        case UavCommand::Kind::Velocity: {
            Point3 v = ctl.velocity;
            const double speed = norm(v);
            if (speed > kin.max_speed) v = v * (kin.max_speed / speed);
            Point3 p = before.position + v * dt;
            p.z = std::clamp(p.z, std::min(kin.z_min, before.position.z), std::max(kin.z_max, before.position.z));
            double yaw = before.yaw;
            if (std::hypot(v.x, v.y) > 1e-9) yaw = slew_yaw(before.yaw, rad2deg(std::atan2(v.y, v.x)), kin.max_yaw_rate * dt);
            next = Pose(p, yaw);
            break;
        }
        case UavCommand::Kind::Hover:
            break;
    }
    if (ctl.kind != UavCommand::Kind::Track) {
        const Point2 drift = wind_drift(cfg.environment, dt, profile);
        next = Pose({next.position.x + drift.x, next.position.y + drift.y, next.position.z}, next.yaw);
    }
    world.uav = next;

    for (std::size_t i = 0; i < cfg.entities.size() && i < world.entities.size(); ++i) {
        if (cfg.entities[i].trajectory) world.entities[i] = entity_state_at(cfg.entities[i], world.time);
    }

    const TimedPath segment({{t0, before}, {world.time, next}});
    for (const auto& v : koz_violations(segment, kozs)) {
        auto it = std::find_if(world.open_violations.begin(), world.open_violations.end(), [&](const OpenViolation& o) {
            return o.koz_id == v.koz_id && o.exit_t >= v.enter_t - 1e-9;
        });
        if (it != world.open_violations.end()) {
            it->exit_t = std::max(it->exit_t, v.exit_t);
        } else {
            world.open_violations.push_back({v.koz_id, v.enter_t, v.exit_t, v.witness_point});
        }
    }
    std::vector<Violation> closed;
    std::vector<OpenViolation> still_open;
    for (const auto& o : world.open_violations) {
        if (o.exit_t < world.time - 1e-9) {
            closed.push_back({o.koz_id, o.enter_t, o.exit_t, o.witness});
        } else {
            still_open.push_back(o);
        }
    }
    world.open_violations = std::move(still_open);
    return closed;
}

std::vector<Violation> close_violations(WorldState& world) {
    std::vector<Violation> out;
    for (const auto& o : world.open_violations) out.push_back({o.koz_id, o.enter_t, o.exit_t, o.witness});
    world.open_violations.clear();
    return out;
}

bool detectable(const Pose& uav, const CameraModel& cam, const SceneEntity& e,
                std::span<const ExtrudedObstacle> obstacles, double range) {
    const auto fp = try_camera_footprint(uav, cam);
    if (!fp || !point_in_polygon(e.bbox.center.xy(), *fp)) return false;
    if (distance(uav.position, e.bbox.center) > range) return false;
    return line_of_sight(uav.position, e.bbox.top_center(), obstacles);
}

std::string decoy_value(const std::string& key, const std::string& true_value, double u) {
    const std::string k = lower(key);
    const std::vector<std::string>* pool = nullptr;
    if (k.find("color") != std::string::npos) {
        pool = &kColorPool;
    } else if (k.find("model") != std::string::npos || k.find("type") != std::string::npos) {
        pool = &kModelPool;
    }
    if (!pool) return "unknown";
    std::vector<std::string> options;
    for (const auto& v : *pool) {
        if (v != lower(true_value)) options.push_back(v);
    }
    const auto idx = std::min(options.size() - 1, static_cast<std::size_t>(u * static_cast<double>(options.size())));
    return options[idx];
}

std::vector<Detection> detect(const WorldState& world, const CameraModel& cam, int camera_index,
                              const EnvironmentConditions& env, std::span<const ExtrudedObstacle> obstacles,
                              const DegradationProfile& profile) {
    std::vector<Detection> out;
    const auto fp = try_camera_footprint(world.uav, cam);
    if (!fp) return out;
    const double range = effective_range(cam, env, profile);
    const double p_corrupt = corruption_probability(env, profile);
    const auto cam_key = static_cast<std::uint64_t>(camera_index) << 32;
    for (const auto& e : world.entities) {
        if (lower(e.class_name) == kGroupClass) continue;
        if (!point_in_polygon(e.bbox.center.xy(), *fp)) continue;
        if (distance(world.uav.position, e.bbox.center) > range) continue;
        if (!line_of_sight(world.uav.position, e.bbox.top_center(), obstacles)) continue;

        const std::uint64_t id_key = fnv1a64(e.id);
        Detection d;
        d.detection_id = "d" + hex64(derive_seed(world.seed, world.tick, id_key, cam_key));
        d.camera = camera_index;
        d.observed_class = e.class_name;
        d.position_estimate = e.bbox.center.xy();
        d.true_entity_id = e.id;
        d.confidence = 1.0 - p_corrupt;
        std::uint64_t i = 0;
        for (const auto& [k, v] : e.attributes) {
            const double u = counter_uniform(world.seed, world.tick, id_key, cam_key | (2 * i));
            if (u < p_corrupt) {
                d.observed_attributes[k] = decoy_value(k, v, counter_uniform(world.seed, world.tick, id_key, cam_key | (2 * i + 1)));
            } else {
                d.observed_attributes[k] = v;
            }
            ++i;
        }
        out.push_back(std::move(d));
    }
    return out;
}

bool in_any_footprint(const Pose& uav, std::span<const CameraModel> cams, const SceneEntity& e) {
    for (const auto& cam : cams) {
        const auto fp = try_camera_footprint(uav, cam);
        if (fp && point_in_polygon(e.bbox.center.xy(), *fp)) return true;
    }
    return false;
}

std::optional<GroundTruthReport> perfect_perception_report(const WorldState& world,
                                                           std::span<const CameraModel> cams,
                                                           const std::string& target_id,
                                                           std::span<const ExtrudedObstacle> obstacles,
                                                           bool require_los) {
    const SceneEntity* t = find_entity(world, target_id);
    if (!t || !in_any_footprint(world.uav, cams, *t)) return std::nullopt;
    if (require_los && !line_of_sight(world.uav.position, t->bbox.top_center(), obstacles)) return std::nullopt;
    return GroundTruthReport{t->id, t->pose, t->bbox.center, world.time};
}

std::string_view to_string(MissionThread t) { return t == MissionThread::Perception ? "perception" : "maneuver"; }

MissionThread parse_thread(std::string_view s) {
    if (s == "perception") return MissionThread::Perception;
    if (s == "maneuver") return MissionThread::Maneuver;
    throw Error("INVALID_OPTION", "unknown mission thread '" + std::string(s) + "'");
}

std::string_view to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Completed: return "COMPLETED";
        case RunStatus::Stopped: return "STOPPED";
        case RunStatus::ClientError: return "CLIENT_ERROR";
    }
    return "COMPLETED";
}

RunStatus parse_status(std::string_view s) {
    if (s == "COMPLETED") return RunStatus::Completed;
    if (s == "STOPPED") return RunStatus::Stopped;
    if (s == "CLIENT_ERROR") return RunStatus::ClientError;
    throw Error("PARSE_ERROR", "unknown run status '" + std::string(s) + "'");
}

Json to_json(const UavCommand& c) {
    Json j{{"type", std::string(to_string(c.kind))}};
    switch (c.kind) {
        case UavCommand::Kind::Waypoints: {
            Json w = Json::array();
            for (const auto& p : c.waypoints) w.push_back(to_json(p));
            j["waypoints"] = w;
            break;
        }
        case UavCommand::Kind::Velocity:
            j["velocity"] = to_json(c.velocity);
            break;
        case UavCommand::Kind::Track:
            j["track"] = to_json(*c.track);
            break;
        case UavCommand::Kind::Hover:
            break;
    }
    return j;
}

UavCommand command_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    const std::string type = as_string(r.required("type"), r.path_of("type"));
    UavCommand c;
    if (type == "hover") {
    } else if (type == "waypoints") {
        const Json& arr = as_array(r.required("waypoints"), r.path_of("waypoints"));
        std::vector<Point3> wps;
        for (std::size_t i = 0; i < arr.size(); ++i) wps.push_back(point3_from_json(arr[i], index_path(r.path_of("waypoints"), i)));
        c = UavCommand::goto_waypoints(std::move(wps));
    } else if (type == "velocity") {
        c = UavCommand::fly_velocity(point3_from_json(r.required("velocity"), r.path_of("velocity")));
    } else if (type == "track") {
        c = UavCommand::follow_track(timed_path_from_json(r.required("track"), r.path_of("track")));
    } else {
        throw Error("TYPE_ERROR", "unknown command type '" + type + "'", r.path_of("type"));
    }
    r.finish();
    return c;
}

namespace {

Detection detection_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    Detection d;
    d.detection_id = as_string(r.required("detection_id"), r.path_of("detection_id"));
    d.camera = static_cast<int>(as_i64(r.required("camera"), r.path_of("camera")));
    d.observed_class = as_string(r.required("observed_class"), r.path_of("observed_class"));
    d.observed_attributes = attributes_from_json(r.required("observed_attributes"), r.path_of("observed_attributes"));
    d.position_estimate = point2_from_json(r.required("position_estimate"), r.path_of("position_estimate"));
    d.true_entity_id = as_string(r.required("true_entity_id"), r.path_of("true_entity_id"));
    d.confidence = as_double(r.required("confidence"), r.path_of("confidence"));
    r.finish();
    return d;
}

GroundTruthReport report_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    GroundTruthReport g;
    g.entity_id = as_string(r.required("entity_id"), r.path_of("entity_id"));
    g.pose = pose_from_json(r.required("pose"), r.path_of("pose"));
    g.center = point3_from_json(r.required("center"), r.path_of("center"));
    g.time = as_double(r.required("time"), r.path_of("time"));
    r.finish();
    return g;
}

}  // namespace

Json to_json(const Detection& d) {
    return Json{{"detection_id", d.detection_id},
                {"camera", d.camera},
                {"observed_class", d.observed_class},
                {"observed_attributes", to_json(d.observed_attributes)},
                {"position_estimate", to_json(d.position_estimate)},
                {"true_entity_id", d.true_entity_id},
                {"confidence", d.confidence}};
}

Json to_json(const GroundTruthReport& r) {
    return Json{{"entity_id", r.entity_id}, {"pose", to_json(r.pose)}, {"center", to_json(r.center)}, {"time", r.time}};
}

Json to_json(const MissionEvent& ev) {
    return std::visit(
        [](const auto& e) -> Json {
            using T = std::decay_t<decltype(e)>;
            Json j{{"tick", e.tick}, {"time", e.time}};
            if constexpr (std::is_same_v<T, TickEvent>) {
                j["kind"] = "tick";
                j["uav"] = to_json(e.uav);
                j["target_in_view"] = e.target_in_view;
                j["in_aoi"] = e.in_aoi;
            } else if constexpr (std::is_same_v<T, DetectionEvent>) {
                j["kind"] = "detection";
                j["detection"] = to_json(e.detection);
            } else if constexpr (std::is_same_v<T, ReportEvent>) {
                j["kind"] = "perfect_report";
                j["report"] = to_json(e.report);
            } else if constexpr (std::is_same_v<T, ViolationEvent>) {
                j["kind"] = "violation";
                j["koz_id"] = e.violation.koz_id;
                j["enter_t"] = e.violation.enter_t;
                j["exit_t"] = e.violation.exit_t;
            } else if constexpr (std::is_same_v<T, CommandEvent>) {
                j["kind"] = "command";
                j["command"] = to_json(e.command);
            } else {
                j["kind"] = "declaration";
                j["source"] = e.source;
                j["detection_id"] = e.detection_id;
                j["entity_id"] = e.entity_id;
            }
            return j;
        },
        ev);
}

MissionEvent event_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    const std::string kind = as_string(r.required("kind"), r.path_of("kind"));
    const std::uint64_t tick = as_u64(r.required("tick"), r.path_of("tick"));
    const double time = as_double(r.required("time"), r.path_of("time"));
    MissionEvent out;
    if (kind == "tick") {
        out = TickEvent{tick, time, pose_from_json(r.required("uav"), r.path_of("uav")),
                        as_bool(r.required("target_in_view"), r.path_of("target_in_view")),
                        as_bool(r.required("in_aoi"), r.path_of("in_aoi"))};
    } else if (kind == "detection") {
        out = DetectionEvent{tick, time, detection_from_json(r.required("detection"), r.path_of("detection"))};
    } else if (kind == "perfect_report") {
        out = ReportEvent{tick, time, report_from_json(r.required("report"), r.path_of("report"))};
    } else if (kind == "violation") {
        out = ViolationEvent{tick, time,
                             Violation{as_string(r.required("koz_id"), r.path_of("koz_id")),
                                       as_double(r.required("enter_t"), r.path_of("enter_t")),
                                       as_double(r.required("exit_t"), r.path_of("exit_t")),
                                       {}}};
    } else if (kind == "command") {
        out = CommandEvent{tick, time, command_from_json(r.required("command"), r.path_of("command"))};
    } else if (kind == "declaration") {
        out = DeclarationEvent{tick, time, as_string(r.required("source"), r.path_of("source")),
                               as_string(r.required("detection_id"), r.path_of("detection_id")),
                               as_string(r.required("entity_id"), r.path_of("entity_id"))};
    } else {
        throw Error("TYPE_ERROR", "unknown event kind '" + kind + "'", r.path_of("kind"));
    }
    r.finish();
    return out;
}

Json MissionLog::header() const {
    return Json{{"kind", "header"},       {"schema_version", kSchemaVersion}, {"mission_hash", mission_hash},
                {"config_hash", config_hash}, {"seed", seed},                 {"thread", std::string(to_string(thread))},
                {"tick_dt", tick_dt}};
}

std::string MissionLog::to_jsonl() const {
    std::string out = canonical_line(header()) + "\n";
    for (const auto& e : events) out += canonical_line(to_json(e)) + "\n";
    out += canonical_line(Json{{"kind", "status"}, {"status", std::string(to_string(status))}, {"error", error}}) + "\n";
    return out;
}

MissionLog MissionLog::from_jsonl(std::string_view text) {
    MissionLog log;
    std::size_t line_no = 0;
    bool have_header = false;
    bool have_status = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        const std::string path = "line[" + std::to_string(++line_no) + "]";
        if (line.empty()) continue;
        const Json j = parse_json(line);
        if (!j.is_object() || !j.contains("kind")) throw Error("PARSE_ERROR", "log line without kind", path);
        const std::string kind = as_string(j.at("kind"), path + ".kind");
        if (kind == "header") {
            ObjectReader r(j, path);
            r.required("kind");
            if (as_string(r.required("schema_version"), r.path_of("schema_version")) != kSchemaVersion) {
                throw Error("SCHEMA_VERSION", "unsupported log schema", path);
            }
            log.mission_hash = as_string(r.required("mission_hash"), r.path_of("mission_hash"));
            log.config_hash = as_string(r.required("config_hash"), r.path_of("config_hash"));
            log.seed = as_u64(r.required("seed"), r.path_of("seed"));
            log.thread = parse_thread(as_string(r.required("thread"), r.path_of("thread")));
            log.tick_dt = as_double(r.required("tick_dt"), r.path_of("tick_dt"));
            r.finish();
            have_header = true;
        } else if (kind == "status") {
            ObjectReader r(j, path);
            r.required("kind");
            log.status = parse_status(as_string(r.required("status"), r.path_of("status")));
            log.error = as_string(r.required("error"), r.path_of("error"));
            r.finish();
            have_status = true;
        } else {
            log.events.push_back(event_from_json(j, path));
        }
    }
    if (!have_header || !have_status) throw Error("PARSE_ERROR", "log is missing its header or status line");
    return log;
}

std::string MissionLog::hash() const { return sha256_hex(to_jsonl()); }

PolicyAction ScriptedPathPolicy::on_tick(const TickObservation& obs) {
    PolicyAction a;
    if (obs.tick == 0) a.command = UavCommand::follow_track(path_);
    return a;
}

PolicyAction WaypointPolicy::on_tick(const TickObservation& obs) {
    PolicyAction a;
    if (obs.tick == 0) a.command = UavCommand::goto_waypoints(waypoints_);
    return a;
}

std::optional<DeclarationEvent> baseline_declaration(const MissionDescription& md, const SimulationConfig& cfg,
                                                     std::span<const Detection> detections) {
    std::map<std::string, std::string> first_detection;
    std::map<std::string, std::string> class_only;
    for (const auto& d : detections) {
        if (lower(d.observed_class) != lower(md.target.class_name)) continue;
        class_only.emplace(d.true_entity_id, d.detection_id);
        const bool attrs_match = std::all_of(md.target.attributes.begin(), md.target.attributes.end(), [&](const auto& kv) {
            const auto it = d.observed_attributes.find(kv.first);
            return it != d.observed_attributes.end() && it->second == kv.second;
        });
        if (attrs_match) first_detection.emplace(d.true_entity_id, d.detection_id);
    }
    if (first_detection.empty()) first_detection = class_only;
    if (first_detection.empty()) return std::nullopt;

    std::vector<Candidate> candidates;
    for (const auto& [id, det] : first_detection) {
        const EntitySpec* e = cfg.find_entity(id);
        candidates.push_back({id, e ? e->attributes : Attributes{}});
    }
    const auto timeline = timeline_of(cfg, md.mission_duration, kRelationTimelineStep);
    const auto ranking = disambiguate(candidates, md.relations, timeline);
    const std::string& best = ranking.ranking.front().entity_id;
    return DeclarationEvent{0, 0.0, "baseline", first_detection.at(best), best};
}

MissionLog run_mission(const MissionDescription& md, const SimulationConfig& cfg, Policy& policy,
                       const RunOptions& options) {
    const auto rep = validate_pair(md, cfg);
    if (!rep.ok()) throw_findings(rep);

    MissionLog log;
    log.mission_hash = sha256_hex(serialize(md));
    log.config_hash = sha256_hex(serialize(cfg));
    log.thread = options.thread;
    log.tick_dt = cfg.tick_dt;

    WorldState world = init_world(cfg);
    if (options.seed_override) world.seed = *options.seed_override;
    log.seed = world.seed;

    const auto last_tick = static_cast<std::uint64_t>(std::llround(md.mission_duration / cfg.tick_dt));
    std::vector<Detection> all_detections;
    std::map<std::string, std::string> detection_owner;
    bool declared = false;

    policy.begin(md, cfg, options.thread);
    while (true) {
        const SceneEntity* target = find_entity(world, md.target.id);
        TickEvent te{world.tick, world.time, world.uav, false, false};
        if (target) te.target_in_view = in_any_footprint(world.uav, cfg.cameras, *target);
        for (const auto& aoi : md.aois) {
            if (aoi_active(aoi, world.time) && point_in_polygon(world.uav.position.xy(), aoi.polygon)) te.in_aoi = true;
        }
        log.events.emplace_back(te);

        TickObservation obs{world.tick, world.time, world.uav, {}, std::nullopt};
        if (options.thread == MissionThread::Perception) {
            for (std::size_t c = 0; c < cfg.cameras.size(); ++c) {
                for (auto& d : detect(world, cfg.cameras[c], static_cast<int>(c), cfg.environment, cfg.obstacles,
                                      options.profile)) {
                    log.events.emplace_back(DetectionEvent{world.tick, world.time, d});
                    detection_owner.emplace(d.detection_id, d.true_entity_id);
                    all_detections.push_back(d);
                    obs.detections.push_back(std::move(d));
                }
            }
        } else {
            obs.report = perfect_perception_report(world, cfg.cameras, md.target.id, cfg.obstacles,
                                                   options.perfect_perception_los);
            if (obs.report) log.events.emplace_back(ReportEvent{world.tick, world.time, *obs.report});
        }
        PolicyAction action;
        try {
            policy.observe(obs);
            if (world.tick >= last_tick) break;
            action = policy.on_tick(obs);
        } catch (const Error& e) {
            log.status = RunStatus::ClientError;
            log.error = e.what();
            break;
        }
        if (action.declare_detection_id) {
            const auto it = detection_owner.find(*action.declare_detection_id);
            log.events.emplace_back(DeclarationEvent{world.tick, world.time, "client", *action.declare_detection_id,
                                                     it == detection_owner.end() ? std::string() : it->second});
            declared = true;
        }
        if (action.command) log.events.emplace_back(CommandEvent{world.tick, world.time, *action.command});
        if (action.stop) {
            log.status = RunStatus::Stopped;
            break;
        }
        for (auto& v : step(world, cfg, md.kozs, action.command, options.profile)) {
            log.events.emplace_back(ViolationEvent{world.tick, world.time, std::move(v)});
        }
    }
    for (auto& v : close_violations(world)) log.events.emplace_back(ViolationEvent{world.tick, world.time, std::move(v)});

    if (!declared && options.baseline_declaration && options.thread == MissionThread::Perception) {
        if (auto d = baseline_declaration(md, cfg, all_detections)) {
            d->tick = world.tick;
            d->time = world.time;
            log.events.emplace_back(std::move(*d));
        }
    }
    policy.end(log.status);
    return log;
}

}  // namespace mforge
