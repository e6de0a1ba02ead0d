#include "mforge/codec.hpp"

#include <set>

#include "mforge/error.hpp"

namespace mforge {

namespace {

void check_schema(ObjectReader& r) {
    const std::string v = as_string(r.required("schema_version"), r.path_of("schema_version"));
    if (v != kSchemaVersion) throw Error("SCHEMA_VERSION", "unsupported schema version " + v, "schema_version");
}

Json window_to_json(const TimeWindow& w) { return Json{{"net", w.net}, {"nlt", w.nlt}}; }

TimeWindow window_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    TimeWindow w{as_double(r.required("net"), r.path_of("net")), as_double(r.required("nlt"), r.path_of("nlt"))};
    r.finish();
    return w;
}

template <class Zone>
Json zone_to_json(const Zone& z) {
    Json j{{"id", z.id}, {"polygon", to_json(z.polygon)}};
    if (z.window) j["window"] = window_to_json(*z.window);
    return j;
}

template <class Zone>
Zone zone_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    std::string id = as_string(r.required("id"), r.path_of("id"));
    Polygon poly = polygon_from_json(r.required("polygon"), r.path_of("polygon"));
    std::optional<TimeWindow> window;
    if (const Json* w = r.optional("window")) window = window_from_json(*w, r.path_of("window"));
    r.finish();
    return Zone{std::move(id), std::move(poly), window};
}

template <class T, class F>
std::vector<T> array_from_json(const Json& j, const std::string& path, F&& parse) {
    std::vector<T> out;
    const Json& arr = as_array(j, path);
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(parse(arr[i], index_path(path, i)));
    return out;
}

Json environment_to_json(const EnvironmentConditions& e) {
    return Json{{"snow", e.snow},
                {"rain", e.rain},
                {"fog", e.fog},
                {"wind_speed_norm", e.wind_speed_norm},
                {"wind_direction", e.wind_direction},
                {"foliage", e.foliage},
                {"camera_noise", e.camera_noise},
                {"time_of_day", e.time_of_day}};
}

EnvironmentConditions environment_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    EnvironmentConditions e;
    auto num = [&](const char* key) { return as_double(r.required(key), r.path_of(key)); };
    e.snow = num("snow");
    e.rain = num("rain");
    e.fog = num("fog");
    e.wind_speed_norm = num("wind_speed_norm");
    e.wind_direction = num("wind_direction");
    e.foliage = num("foliage");
    e.camera_noise = num("camera_noise");
    e.time_of_day = num("time_of_day");
    r.finish();
    return e;
}

Json kinematics_to_json(const UavKinematics& k) {
    return Json{{"max_speed", k.max_speed}, {"max_yaw_rate", k.max_yaw_rate}, {"z_min", k.z_min}, {"z_max", k.z_max}};
}

UavKinematics kinematics_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    UavKinematics k;
    k.max_speed = as_double(r.required("max_speed"), r.path_of("max_speed"));
    k.max_yaw_rate = as_double(r.required("max_yaw_rate"), r.path_of("max_yaw_rate"));
    k.z_min = as_double(r.required("z_min"), r.path_of("z_min"));
    k.z_max = as_double(r.required("z_max"), r.path_of("z_max"));
    r.finish();
    return k;
}

Json entity_to_json(const EntitySpec& e) {
    Json j{{"id", e.id},
           {"class", e.class_name},
           {"attributes", to_json(e.attributes)},
           {"initial_pose", to_json(e.initial_pose)},
           {"bbox", to_json(e.bbox)},
           {"is_target", e.is_target},
           {"is_confuser", e.is_confuser}};
    if (e.trajectory) j["trajectory"] = to_json(*e.trajectory);
    return j;
}

EntitySpec entity_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    EntitySpec e;
    e.id = as_string(r.required("id"), r.path_of("id"));
    e.class_name = as_string(r.required("class"), r.path_of("class"));
    if (const Json* a = r.optional("attributes")) e.attributes = attributes_from_json(*a, r.path_of("attributes"));
    e.initial_pose = pose_from_json(r.required("initial_pose"), r.path_of("initial_pose"));
    e.bbox = bbox_from_json(r.required("bbox"), r.path_of("bbox"));
    if (const Json* t = r.optional("trajectory")) e.trajectory = timed_path_from_json(*t, r.path_of("trajectory"));
    if (const Json* b = r.optional("is_target")) e.is_target = as_bool(*b, r.path_of("is_target"));
    if (const Json* b = r.optional("is_confuser")) e.is_confuser = as_bool(*b, r.path_of("is_confuser"));
    r.finish();
    return e;
}

}  // namespace

Json to_json(const Point2& p) { return Json::array({p.x, p.y}); }
Json to_json(const Point3& p) { return Json::array({p.x, p.y, p.z}); }

Json to_json(const Polygon& p) {
    Json arr = Json::array();
    for (const auto& v : p.vertices()) arr.push_back(to_json(v));
    return arr;
}

Json to_json(const Pose& p) { return Json{{"position", to_json(p.position)}, {"yaw", p.yaw}}; }

Json to_json(const BoundingBox3& b) {
    return Json{{"center", to_json(b.center)}, {"extents", to_json(b.extents)}, {"yaw", b.yaw}};
}

Json to_json(const ExtrudedObstacle& o) { return Json{{"footprint", to_json(o.footprint)}, {"height", o.height}}; }

Json to_json(const TimedPath& path) {
    Json samples = Json::array();
    for (const auto& s : path.samples()) samples.push_back(Json{{"t", s.t}, {"pose", to_json(s.pose)}});
    return Json{{"samples", samples}};
}

Json to_json(const SymbolicRelation& r) {
    return Json{{"related_class", r.related_class},
                {"operator", r.op.name()},
                {"target_id", r.target_id},
                {"related_attributes", to_json(r.related_attributes)}};
}

Json to_json(const CameraModel& c) {
    return Json{{"hfov", c.hfov}, {"vfov", c.vfov}, {"max_range", c.max_range}, {"pitch", c.pitch},
                {"mount_yaw", c.mount_yaw}};
}

Json to_json(const Attributes& a) {
    Json j = Json::object();
    for (const auto& [k, v] : a) j[k] = v;
    return j;
}

Point2 point2_from_json(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) throw Error("TYPE_ERROR", "expected [x, y]", path);
    return {as_double(j[0], index_path(path, 0)), as_double(j[1], index_path(path, 1))};
}

Point3 point3_from_json(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) throw Error("TYPE_ERROR", "expected [x, y, z]", path);
    return {as_double(j[0], index_path(path, 0)), as_double(j[1], index_path(path, 1)),
            as_double(j[2], index_path(path, 2))};
}

Polygon polygon_from_json(const Json& j, const std::string& path) {
    auto pts = array_from_json<Point2>(j, path, point2_from_json);
    try {
        return Polygon(std::move(pts));
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), path);
    }
}

Pose pose_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    const Point3 p = point3_from_json(r.required("position"), r.path_of("position"));
    const double yaw = as_double(r.required("yaw"), r.path_of("yaw"));
    r.finish();
    return Pose(p, yaw);
}

BoundingBox3 bbox_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    BoundingBox3 b;
    b.center = point3_from_json(r.required("center"), r.path_of("center"));
    b.extents = point3_from_json(r.required("extents"), r.path_of("extents"));
    b.yaw = as_double(r.required("yaw"), r.path_of("yaw"));
    r.finish();
    return b;
}

ExtrudedObstacle obstacle_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    ExtrudedObstacle o{polygon_from_json(r.required("footprint"), r.path_of("footprint")),
                       as_double(r.required("height"), r.path_of("height"))};
    r.finish();
    return o;
}

TimedPath timed_path_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    const std::string sp = r.path_of("samples");
    auto samples = array_from_json<PathSample>(r.required("samples"), sp, [](const Json& s, const std::string& p) {
        ObjectReader sr(s, p);
        PathSample out{as_double(sr.required("t"), sr.path_of("t")), pose_from_json(sr.required("pose"), sr.path_of("pose"))};
        sr.finish();
        return out;
    });
    r.finish();
    try {
        return TimedPath(std::move(samples));
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), sp);
    }
}

SymbolicRelation relation_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    SymbolicRelation rel;
    rel.related_class = as_string(r.required("related_class"), r.path_of("related_class"));
    const std::string op = as_string(r.required("operator"), r.path_of("operator"));
    try {
        rel.op = RelationOperator::parse(op);
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), r.path_of("operator"));
    }
    rel.target_id = as_string(r.required("target_id"), r.path_of("target_id"));
    if (const Json* a = r.optional("related_attributes")) {
        rel.related_attributes = attributes_from_json(*a, r.path_of("related_attributes"));
    }
    r.finish();
    return rel;
}

CameraModel camera_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    CameraModel c;
    c.hfov = as_double(r.required("hfov"), r.path_of("hfov"));
    c.vfov = as_double(r.required("vfov"), r.path_of("vfov"));
    c.max_range = as_double(r.required("max_range"), r.path_of("max_range"));
    c.pitch = as_double(r.required("pitch"), r.path_of("pitch"));
    c.mount_yaw = as_double(r.required("mount_yaw"), r.path_of("mount_yaw"));
    r.finish();
    return c;
}

Attributes attributes_from_json(const Json& j, const std::string& path) {
    if (!j.is_object()) throw Error("TYPE_ERROR", "expected object", path);
    Attributes out;
    for (const auto& [k, v] : j.items()) out[k] = as_string(v, join_path(path, k));
    return out;
}

Json mission_to_json(const MissionDescription& md) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["objective"] = std::string(to_string(md.objective));
    j["target_spec"] = Json{{"id", md.target.id}, {"class", md.target.class_name}, {"attributes", to_json(md.target.attributes)}};
    j["aois"] = Json::array();
    for (const auto& a : md.aois) j["aois"].push_back(zone_to_json(a));
    j["kozs"] = Json::array();
    for (const auto& k : md.kozs) j["kozs"].push_back(zone_to_json(k));
    if (md.route) {
        Json poly = Json::array();
        for (const auto& p : md.route->polyline) poly.push_back(to_json(p));
        j["route"] = Json{{"polyline", poly}, {"band_width", md.route->band_width}};
    }
    if (md.priors) {
        Json cells = Json::array();
        for (const auto& c : md.priors->cells) cells.push_back(Json{{"polygon", to_json(c.polygon)}, {"prob", c.prob}});
        j["priors"] = Json{{"cells", cells}};
    }
    j["relations"] = Json::array();
    for (const auto& r : md.relations) j["relations"].push_back(to_json(r));
    j["mission_duration"] = md.mission_duration;
    return j;
}

MissionDescription mission_from_json(const Json& j) {
    ObjectReader r(j, "");
    check_schema(r);
    MissionDescription md;
    {
        const std::string v = as_string(r.required("objective"), "objective");
        try {
            md.objective = parse_objective(v);
        } catch (const Error& e) {
            throw Error(e.code(), e.what(), "objective");
        }
    }
    {
        ObjectReader t(r.required("target_spec"), "target_spec");
        md.target.id = as_string(t.required("id"), t.path_of("id"));
        md.target.class_name = as_string(t.required("class"), t.path_of("class"));
        if (const Json* a = t.optional("attributes")) md.target.attributes = attributes_from_json(*a, t.path_of("attributes"));
        t.finish();
    }
    if (const Json* a = r.optional("aois")) md.aois = array_from_json<AreaOfInterest>(*a, "aois", zone_from_json<AreaOfInterest>);
    if (const Json* k = r.optional("kozs")) md.kozs = array_from_json<KeepOutZone>(*k, "kozs", zone_from_json<KeepOutZone>);
    if (const Json* rt = r.optional("route")) {
        ObjectReader rr(*rt, "route");
        RouteOfInterest route;
        route.polyline = array_from_json<Point2>(rr.required("polyline"), "route.polyline", point2_from_json);
        route.band_width = as_double(rr.required("band_width"), "route.band_width");
        rr.finish();
        md.route = std::move(route);
    }
    if (const Json* p = r.optional("priors")) {
        ObjectReader pr(*p, "priors");
        AreaPriorMap priors;
        priors.cells = array_from_json<PriorCell>(pr.required("cells"), "priors.cells", [](const Json& c, const std::string& path) {
            ObjectReader cr(c, path);
            PriorCell cell{polygon_from_json(cr.required("polygon"), cr.path_of("polygon")),
                           as_double(cr.required("prob"), cr.path_of("prob"))};
            cr.finish();
            return cell;
        });
        pr.finish();
        md.priors = std::move(priors);
    }
    if (const Json* rels = r.optional("relations")) {
        md.relations = array_from_json<SymbolicRelation>(*rels, "relations", relation_from_json);
    }
    if (const Json* d = r.optional("mission_duration")) md.mission_duration = as_double(*d, "mission_duration");
    r.finish();

    std::set<std::string> ids;
    for (std::size_t i = 0; i < md.aois.size(); ++i) {
        if (!ids.insert(md.aois[i].id).second) throw Error("DUPLICATE_ID", "duplicate AOI id " + md.aois[i].id, index_path("aois", i) + ".id");
    }
    ids.clear();
    for (std::size_t i = 0; i < md.kozs.size(); ++i) {
        if (!ids.insert(md.kozs[i].id).second) throw Error("DUPLICATE_ID", "duplicate KOZ id " + md.kozs[i].id, index_path("kozs", i) + ".id");
    }
    return md;
}

Json config_to_json(const SimulationConfig& cfg) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["entities"] = Json::array();
    for (const auto& e : cfg.entities) j["entities"].push_back(entity_to_json(e));
    j["obstacles"] = Json::array();
    for (const auto& o : cfg.obstacles) j["obstacles"].push_back(to_json(o));
    j["environment"] = environment_to_json(cfg.environment);
    j["uav_start"] = to_json(cfg.uav_start);
    j["uav_kinematics"] = kinematics_to_json(cfg.uav_kinematics);
    j["cameras"] = Json::array();
    for (const auto& c : cfg.cameras) j["cameras"].push_back(to_json(c));
    j["seed"] = cfg.seed;
    j["tick_dt"] = cfg.tick_dt;
    return j;
}

SimulationConfig config_from_json(const Json& j) {
    ObjectReader r(j, "");
    check_schema(r);
    SimulationConfig cfg;
    cfg.entities = array_from_json<EntitySpec>(r.required("entities"), "entities", entity_from_json);
    if (const Json* o = r.optional("obstacles")) cfg.obstacles = array_from_json<ExtrudedObstacle>(*o, "obstacles", obstacle_from_json);
    cfg.environment = environment_from_json(r.required("environment"), "environment");
    cfg.uav_start = pose_from_json(r.required("uav_start"), "uav_start");
    if (const Json* k = r.optional("uav_kinematics")) cfg.uav_kinematics = kinematics_from_json(*k, "uav_kinematics");
    cfg.cameras = array_from_json<CameraModel>(r.required("cameras"), "cameras", camera_from_json);
    cfg.seed = as_u64(r.required("seed"), "seed");
    if (const Json* t = r.optional("tick_dt")) cfg.tick_dt = as_double(*t, "tick_dt");
    r.finish();

    std::set<std::string> ids;
    for (std::size_t i = 0; i < cfg.entities.size(); ++i) {
        if (!ids.insert(cfg.entities[i].id).second) {
            throw Error("DUPLICATE_ID", "duplicate entity id " + cfg.entities[i].id, index_path("entities", i) + ".id");
        }
    }
    return cfg;
}

namespace {

[[noreturn]] void throw_invalid(const ValidationReport& rep) {
    const auto& f = rep.findings.front();
    throw Error("INVALID_DOCUMENT", f.code + ": " + f.message, f.path);
}

}  // namespace

std::string serialize(const MissionDescription& md) {
    const auto rep = validate_mission(md);
    if (!rep.ok()) throw_invalid(rep);
    return canonical_document(mission_to_json(md));
}

std::string serialize(const SimulationConfig& cfg) {
    const auto rep = validate_config(cfg);
    if (!rep.ok()) throw_invalid(rep);
    return canonical_document(config_to_json(cfg));
}

std::string serialize(const TimedPath& path) {
    Json j = to_json(path);
    j["schema_version"] = kSchemaVersion;
    return canonical_document(j);
}

MissionDescription deserialize_mission(std::string_view bytes) { return mission_from_json(parse_json(bytes)); }

SimulationConfig deserialize_config(std::string_view bytes) { return config_from_json(parse_json(bytes)); }

TimedPath deserialize_path(std::string_view bytes) {
    Json j = parse_json(bytes);
    if (!j.is_object()) throw Error("TYPE_ERROR", "expected object", "$");
    const auto it = j.find("schema_version");
    if (it == j.end()) throw Error("MISSING_FIELD", "required field missing", "schema_version");
    if (*it != kSchemaVersion) throw Error("SCHEMA_VERSION", "unsupported schema version", "schema_version");
    j.erase("schema_version");
    return timed_path_from_json(j, "");
}

}  // namespace mforge
