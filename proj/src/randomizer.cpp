#include "mforge/randomizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "mforge/codec.hpp"
#include "mforge/constraints.hpp"
#include "mforge/error.hpp"
#include "mforge/hashing.hpp"
#include "mforge/planning.hpp"
#include "mforge/rng.hpp"

namespace mforge {

namespace {

constexpr double kLaneOffset = 3.0;
constexpr double kBearingJitter = 5.0;
constexpr double kRouteClearance = 1.5;
constexpr double kTargetKozStandoff = 30.0;
constexpr double kStartKozStandoff = 15.0;
constexpr double kAnchorBearings[] = {kLeftOfDeg, kInFrontOfDeg, kRightOfDeg};
constexpr double kDecoyBearings[] = {0.0, kLeftOfDeg, kInFrontOfDeg, kRightOfDeg};

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[rng.index(v.size())];
}

template <class T>
void shuffle(Rng& rng, std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

double sample(Rng& rng, const Range& r) { return rng.uniform(r.lo, r.hi); }
int sample(Rng& rng, const IntRange& r) { return static_cast<int>(rng.integer(r.lo, r.hi)); }

Point2 heading(double deg) { return {std::cos(deg2rad(deg)), std::sin(deg2rad(deg))}; }

Polygon grow(const Polygon& p, double d) {
    const Aabb2& b = p.bounds();
    return Polygon::rectangle(b.min.x - d, b.min.y - d, b.max.x + d, b.max.y + d);
}

Attributes sample_attributes(Rng& rng, const ClassSpec& spec) {
    Attributes a;
    for (const auto& [k, pool] : spec.attribute_pools) a[k] = pick(rng, pool);
    return a;
}

BoundingBox3 box_at(const ClassSpec& spec, const Point2& c, double yaw) {
    return BoundingBox3{{c.x, c.y, spec.size.z / 2.0}, {spec.size.x / 2.0, spec.size.y / 2.0, spec.size.z / 2.0}, yaw};
}

struct LaneSpot {
    Point2 position;
    double yaw = 0.0;
};

class Scene {
public:
    Scene(const ScenarioTemplate& tpl, Rng& rng) : tpl_(tpl), rng_(rng) {}

    bool is_free(const Polygon& fp) const {
        for (const auto& v : fp.vertices()) {
            if (!point_in_polygon(v, tpl_.world)) return false;
        }
        for (const auto& o : tpl_.obstacles) {
            if (o.footprint.bounds().overlaps(fp.bounds()) && polygons_intersect(o.footprint, fp)) return false;
        }
        for (const auto& other : footprints_) {
            if (other.bounds().overlaps(fp.bounds()) && polygons_intersect(other, fp)) return false;
        }
        return true;
    }

    std::optional<LaneSpot> lane_spot() {
        const Polygon& street = pick(rng_, tpl_.streets);
        const Aabb2& b = street.bounds();
        const bool horizontal = b.width() >= b.height();
        const double side = rng_.bernoulli(0.5) ? 1.0 : -1.0;
        LaneSpot s;
        if (horizontal) {
            s.position = {rng_.uniform(b.min.x + 5.0, b.max.x - 5.0), 0.5 * (b.min.y + b.max.y) + side * kLaneOffset};
            s.yaw = side < 0 ? 0.0 : 180.0;
        } else {
            s.position = {0.5 * (b.min.x + b.max.x) + side * kLaneOffset, rng_.uniform(b.min.y + 5.0, b.max.y - 5.0)};
            s.yaw = side > 0 ? 90.0 : 270.0;
        }
        if (!point_in_polygon(s.position, street)) return std::nullopt;
        return s;
    }

    void add(EntitySpec e) {
        footprints_.push_back(e.bbox.footprint());
        entities_.push_back(std::move(e));
    }

    /// Places a landmark at `bearing` (target body frame) from an anchor pose.
    std::optional<EntitySpec> landmark_near(const Pose& anchor, const ClassSpec& car, const ClassSpec& cls,
                                            Attributes attrs, double bearing) {
        const double car_reach = 0.5 * std::hypot(car.size.x, car.size.y);
        const double reach = 0.5 * std::hypot(cls.size.x, cls.size.y);
        const double d_min = car_reach + reach + 0.5;
        const double d_max = std::max(d_min + 0.5, tpl_.relation_params.next_to_max_dist - 1.0);
        for (int attempt = 0; attempt < 8; ++attempt) {
            const double b = bearing + rng_.uniform(-kBearingJitter, kBearingJitter);
            const Point2 c = anchor.position.xy() + heading(anchor.yaw + b) * rng_.uniform(d_min, d_max);
            EntitySpec e;
            e.class_name = cls.class_name;
            e.attributes = attrs;
            e.initial_pose = Pose({c.x, c.y, 0.0}, anchor.yaw);
            e.bbox = box_at(cls, c, anchor.yaw);
            if (is_free(e.bbox.footprint())) return e;
        }
        return std::nullopt;
    }

    std::vector<EntitySpec>& entities() { return entities_; }

private:
    const ScenarioTemplate& tpl_;
    Rng& rng_;
    std::vector<EntitySpec> entities_;
    std::vector<Polygon> footprints_;
};

EnvironmentConditions sample_environment(Rng& rng, const EnvironmentRanges& r) {
    EnvironmentConditions e;
    e.snow = sample(rng, r.snow);
    e.rain = sample(rng, r.rain);
    e.fog = sample(rng, r.fog);
    e.wind_speed_norm = sample(rng, r.wind_speed_norm);
    e.foliage = sample(rng, r.foliage);
    e.camera_noise = sample(rng, r.camera_noise);
    e.wind_direction = normalize_deg(sample(rng, r.wind_direction));
    e.time_of_day = sample(rng, r.time_of_day);
    return e;
}

Point2 sample_in(Rng& rng, const Polygon& region) {
    const Aabb2& b = region.bounds();
    for (int i = 0; i < 1000; ++i) {
        const Point2 p{rng.uniform(b.min.x, b.max.x), rng.uniform(b.min.y, b.max.y)};
        if (point_in_polygon(p, region)) return p;
    }
    return region.centroid();
}

struct RelationCandidate {
    SymbolicRelation relation;
    std::vector<bool> fails;  // per confuser
};

bool relation_holds_for(const SymbolicRelation& rel, const std::string& candidate, const SceneTimeline& timeline,
                        const RelationParams& params) {
    const Candidate c{candidate, {}};
    const auto d = disambiguate(std::span(&c, 1), std::span(&rel, 1), timeline, params);
    return d.ranking.front().score == 1.0;
}

std::optional<ScenarioPair> sample_once(const ScenarioTemplate& tpl, Rng& rng) {
    const Objective objective = pick(rng, tpl.objectives);
    const bool moving = objective != Objective::AreaSearch;
    const ClassSpec& car = pick(rng, tpl.target_classes);
    const Attributes car_attrs = sample_attributes(rng, car);
    Scene scene(tpl, rng);

    // Target placement and, for moving objectives, its route.
    const auto start = scene.lane_spot();
    if (!start) return std::nullopt;
    EntitySpec target;
    target.class_name = car.class_name;
    target.attributes = car_attrs;
    target.is_target = true;
    Pose target_pose({start->position.x, start->position.y, 0.0}, start->yaw);
    if (moving) {
        const auto goal = scene.lane_spot();
        if (!goal || distance(goal->position, start->position) < tpl.min_route_length) return std::nullopt;
        RrtConfig rc;
        rc.seed = rng.next();
        rc.clearance = kRouteClearance;
        try {
            target.trajectory = plan_entity_route(start->position, goal->position, tpl.obstacles, rc, tpl.car_speed);
        } catch (const Error&) {
            return std::nullopt;
        }
        if (target.trajectory->end_time() > tpl.mission_duration) return std::nullopt;
        target_pose = target.trajectory->samples().front().pose;
    }
    target.initial_pose = target_pose;
    target.bbox = box_at(car, target_pose.position.xy(), target_pose.yaw);
    if (!scene.is_free(target.bbox.footprint())) return std::nullopt;
    scene.add(target);

    // Signature landmarks at distinct anchor bearings around the target.
    std::vector<double> anchors(std::begin(kAnchorBearings), std::end(kAnchorBearings));
    shuffle(rng, anchors);
    const int n_sig = std::min<int>(sample(rng, tpl.signature_landmarks), static_cast<int>(anchors.size()));
    struct Signature {
        const ClassSpec* cls;
        Attributes attrs;
        double bearing;
    };
    std::vector<Signature> signatures;
    for (int i = 0; i < n_sig; ++i) {
        const ClassSpec& cls = pick(rng, tpl.landmark_classes);
        Attributes attrs = sample_attributes(rng, cls);
        auto lm = scene.landmark_near(target_pose, car, cls, attrs, anchors[static_cast<std::size_t>(i)]);
        if (!lm) return std::nullopt;
        scene.add(std::move(*lm));
        signatures.push_back({&cls, std::move(attrs), anchors[static_cast<std::size_t>(i)]});
    }

    // A landmark near the end of the route supports an EVENTUALLY_ relation.
    if (moving && rng.bernoulli(0.5)) {
        const Pose end = target.trajectory->samples().back().pose;
        const ClassSpec& cls = pick(rng, tpl.landmark_classes);
        if (auto lm = scene.landmark_near(end, car, cls, sample_attributes(rng, cls), pick(rng, anchors))) {
            scene.add(std::move(*lm));
        }
    }

    // Look-alike cars, some with decoy landmarks at other bearings.
    const int n_conf = sample(rng, tpl.confusers);
    std::vector<Pose> car_poses{target_pose};
    for (int i = 0; i < n_conf; ++i) {
        std::optional<EntitySpec> placed;
        for (int attempt = 0; attempt < 20 && !placed; ++attempt) {
            const auto spot = scene.lane_spot();
            if (!spot) continue;
            bool far = true;
            for (const auto& p : car_poses) far = far && distance(p.position.xy(), spot->position) >= tpl.min_confuser_separation;
            if (target.trajectory) {
                for (const auto& s : target.trajectory->samples()) {
                    far = far && distance(s.pose.position.xy(), spot->position) >= tpl.min_confuser_separation;
                }
            }
            if (!far) continue;
            EntitySpec c;
            c.class_name = car.class_name;
            c.attributes = car_attrs;
            c.is_confuser = true;
            c.initial_pose = Pose({spot->position.x, spot->position.y, 0.0}, spot->yaw);
            c.bbox = box_at(car, spot->position, spot->yaw);
            if (scene.is_free(c.bbox.footprint())) placed = std::move(c);
        }
        if (!placed) return std::nullopt;
        const Pose pose = placed->initial_pose;
        scene.add(std::move(*placed));
        car_poses.push_back(pose);
        if (!signatures.empty() && rng.bernoulli(0.7)) {
            const Signature& sig = pick(rng, signatures);
            std::vector<double> others;
            for (double b : kDecoyBearings) {
                if (b != sig.bearing) others.push_back(b);
            }
            if (auto lm = scene.landmark_near(pose, car, *sig.cls, sig.attrs, pick(rng, others))) scene.add(std::move(*lm));
        }
    }

    // Identifiers: cars are numbered in random order so ids reveal nothing.
    auto& ents = scene.entities();
    std::vector<std::size_t> car_numbers;
    for (std::size_t i = 0; i < car_poses.size(); ++i) car_numbers.push_back(i + 1);
    shuffle(rng, car_numbers);
    std::map<std::string, int> class_counters;
    std::size_t car_index = 0;
    for (auto& e : ents) {
        if (e.class_name == car.class_name) {
            e.id = car.class_name + "_" + std::to_string(car_numbers[car_index++]);
        } else {
            e.id = e.class_name + "_" + std::to_string(++class_counters[e.class_name]);
        }
    }
    const std::string target_id = ents.front().id;
    std::vector<std::string> confuser_ids;
    for (const auto& e : ents) {
        if (e.is_confuser) confuser_ids.push_back(e.id);
    }
    std::sort(ents.begin(), ents.end(), [](const EntitySpec& a, const EntitySpec& b) { return a.id < b.id; });

    SimulationConfig cfg;
    cfg.entities = ents;
    cfg.obstacles = tpl.obstacles;
    cfg.environment = sample_environment(rng, tpl.environment);
    const Point2 uav_xy = sample_in(rng, tpl.uav_start_region);
    cfg.uav_start = Pose({uav_xy.x, uav_xy.y, sample(rng, tpl.uav_altitude)}, rng.uniform(0.0, 360.0));
    cfg.uav_kinematics = tpl.uav_kinematics;
    std::vector<CameraModel> cams = tpl.camera_pool;
    shuffle(rng, cams);
    cams.resize(std::min<std::size_t>(cams.size(), static_cast<std::size_t>(sample(rng, tpl.cameras))));
    cfg.cameras = cams;
    cfg.seed = rng.next();
    cfg.tick_dt = tpl.tick_dt;

    // Relations: greedy cover of the confusers with relations true for the target.
    const double horizon = target.trajectory ? std::min(tpl.mission_duration, std::ceil(target.trajectory->end_time()) + 1.0)
                                             : 0.0;
    const SceneTimeline timeline = timeline_of(cfg, horizon, kRelationTimelineStep);
    const auto& params = tpl.relation_params;
    std::vector<RelationCandidate> candidates;
    auto consider = [&](const ExtractedRelation& x, int depth) {
        const SceneEntity* rel = timeline.front().find(x.related_id);
        if (!rel || rel->class_name == car.class_name) return;
        const SpatialOp op = x.relation.op.op;
        if (op == SpatialOp::NotNextTo || op == SpatialOp::NotOnTopOf) return;
        SymbolicRelation r = x.relation;
        r.op.temporal_depth = depth;
        for (const auto& c : candidates) {
            if (c.relation == r) return;
        }
        if (!relation_holds_for(r, target_id, timeline, params)) return;
        RelationCandidate rc{r, {}};
        for (const auto& id : confuser_ids) rc.fails.push_back(!relation_holds_for(r, id, timeline, params));
        candidates.push_back(std::move(rc));
    };
    for (const auto& x : extract_relations(target_id, timeline.front(), params)) consider(x, 0);
    if (timeline.snapshots().size() > 1) {
        for (const auto& x : extract_relations(target_id, timeline.snapshots().back(), params)) consider(x, 1);
    }

    std::vector<bool> covered(confuser_ids.size(), false);
    std::vector<bool> chosen(candidates.size(), false);
    std::vector<SymbolicRelation> relations;
    while (std::find(covered.begin(), covered.end(), false) != covered.end()) {
        std::size_t best = candidates.size();
        std::size_t best_gain = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (chosen[i]) continue;
            std::size_t gain = 0;
            for (std::size_t k = 0; k < covered.size(); ++k) gain += (!covered[k] && candidates[i].fails[k]) ? 1 : 0;
            if (gain > best_gain) {
                best_gain = gain;
                best = i;
            }
        }
        if (best == candidates.size()) return std::nullopt;
        chosen[best] = true;
        relations.push_back(candidates[best].relation);
        for (std::size_t k = 0; k < covered.size(); ++k) covered[k] = covered[k] || candidates[best].fails[k];
    }
    if (static_cast<int>(relations.size()) > tpl.relations.hi) return std::nullopt;
    const int wanted = static_cast<int>(rng.integer(std::max<int>(tpl.relations.lo, static_cast<int>(relations.size())),
                                                    tpl.relations.hi));
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!chosen[i]) rest.push_back(i);
    }
    shuffle(rng, rest);
    for (std::size_t i : rest) {
        if (static_cast<int>(relations.size()) >= wanted) break;
        relations.push_back(candidates[i].relation);
    }
    if (static_cast<int>(relations.size()) < tpl.relations.lo) return std::nullopt;

    std::vector<Candidate> look_alikes{{target_id, car_attrs}};
    for (const auto& id : confuser_ids) look_alikes.push_back({id, car_attrs});
    const auto ranking = disambiguate(look_alikes, relations, timeline, params).ranking;
    if (ranking.front().entity_id != target_id) return std::nullopt;
    if (ranking.size() > 1 && !(ranking[1].score < ranking[0].score)) return std::nullopt;

    MissionDescription md;
    md.objective = objective;
    md.target = TargetSpec{target_id, car.class_name, car_attrs};
    md.relations = relations;
    md.mission_duration = tpl.mission_duration;

    const Aabb2& wb = tpl.world.bounds();
    if (objective != Objective::RouteSearch) {
        const double w = sample(rng, tpl.aoi_size);
        const double h = sample(rng, tpl.aoi_size);
        const double fx = rng.uniform(0.15, 0.85);
        const double fy = rng.uniform(0.15, 0.85);
        const Point2 t = target_pose.position.xy();
        const double x0 = std::max(wb.min.x, t.x - fx * w);
        const double x1 = std::min(wb.max.x, t.x + (1.0 - fx) * w);
        const double y0 = std::max(wb.min.y, t.y - fy * h);
        const double y1 = std::min(wb.max.y, t.y + (1.0 - fy) * h);
        if (x1 - x0 < 10.0 || y1 - y0 < 10.0) return std::nullopt;
        AreaOfInterest aoi{"aoi_1", Polygon::rectangle(x0, y0, x1, y1), std::nullopt};
        if (objective == Objective::AreaSearch) md.priors = decompose_aoi(aoi, tpl.aoi_depth, t, rng.next());
        md.aois.push_back(std::move(aoi));
    } else {
        RouteOfInterest route;
        for (const auto& s : target.trajectory->samples()) route.polyline.push_back(s.pose.position.xy());
        route.band_width = tpl.route_band_width;
        md.route = std::move(route);
        std::vector<std::size_t> crossed;
        for (std::size_t i = 0; i < tpl.streets.size(); ++i) {
            if (!occupancy_intervals(*target.trajectory, tpl.streets[i]).empty()) crossed.push_back(i);
        }
        shuffle(rng, crossed);
        const auto n_deny = std::min<std::size_t>(crossed.size(), static_cast<std::size_t>(sample(rng, tpl.street_denial_kozs)));
        std::sort(crossed.begin(), crossed.begin() + static_cast<std::ptrdiff_t>(n_deny));
        for (std::size_t k = 0; k < n_deny; ++k) {
            md.kozs.push_back(street_denial_koz(tpl.streets[crossed[k]], *target.trajectory, rng.uniform(0.0, 5.0),
                                                "street_denial_" + std::to_string(k + 1)));
        }
    }

    const int n_koz = sample(rng, tpl.kozs);
    for (int i = 0; i < n_koz; ++i) {
        for (int attempt = 0; attempt < 30; ++attempt) {
            const double w = sample(rng, tpl.koz_size);
            const double h = sample(rng, tpl.koz_size);
            const double x0 = rng.uniform(wb.min.x, wb.max.x - w);
            const double y0 = rng.uniform(wb.min.y, wb.max.y - h);
            const Polygon rect = Polygon::rectangle(x0, y0, x0 + w, y0 + h);
            const Polygon keep_clear = grow(rect, kTargetKozStandoff);
            bool ok = !point_in_polygon(cfg.uav_start.position.xy(), grow(rect, kStartKozStandoff));
            if (target.trajectory) {
                const auto& s = target.trajectory->samples();
                for (std::size_t k = 0; ok && k + 1 < s.size(); ++k) {
                    ok = !segment_polygon_overlap(s[k].pose.position.xy(), s[k + 1].pose.position.xy(), keep_clear);
                }
            }
            ok = ok && !point_in_polygon(target_pose.position.xy(), keep_clear);
            if (!ok) continue;
            std::optional<TimeWindow> window;
            if (rng.bernoulli(0.5)) {
                const double net = rng.uniform(0.0, 0.5 * tpl.mission_duration);
                window = TimeWindow{net, rng.uniform(net + 0.05 * tpl.mission_duration, tpl.mission_duration)};
            }
            md.kozs.push_back({"koz_" + std::to_string(i + 1), rect, window});
            break;
        }
    }

    if (!validate_pair(md, cfg).ok()) return std::nullopt;
    return ScenarioPair{std::move(md), std::move(cfg)};
}

Json range_to_json(const Range& r) { return Json{{"lo", r.lo}, {"hi", r.hi}}; }
Json range_to_json(const IntRange& r) { return Json{{"lo", r.lo}, {"hi", r.hi}}; }

Range range_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    Range out{as_double(r.required("lo"), r.path_of("lo")), as_double(r.required("hi"), r.path_of("hi"))};
    r.finish();
    return out;
}

IntRange int_range_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    IntRange out{static_cast<int>(as_i64(r.required("lo"), r.path_of("lo"))),
                 static_cast<int>(as_i64(r.required("hi"), r.path_of("hi")))};
    r.finish();
    return out;
}

Json class_to_json(const ClassSpec& c) {
    Json pools = Json::object();
    for (const auto& [k, v] : c.attribute_pools) pools[k] = v;
    return Json{{"class", c.class_name}, {"size", to_json(c.size)}, {"attribute_pools", pools}};
}

ClassSpec class_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    ClassSpec c;
    c.class_name = as_string(r.required("class"), r.path_of("class"));
    c.size = point3_from_json(r.required("size"), r.path_of("size"));
    const Json& pools = r.required("attribute_pools");
    if (!pools.is_object()) throw Error("TYPE_ERROR", "expected object", r.path_of("attribute_pools"));
    for (const auto& [k, v] : pools.items()) {
        const std::string p = join_path(r.path_of("attribute_pools"), k);
        const Json& arr = as_array(v, p);
        for (std::size_t i = 0; i < arr.size(); ++i) c.attribute_pools[k].push_back(as_string(arr[i], index_path(p, i)));
    }
    r.finish();
    return c;
}

}  // namespace

ValidationReport validate_template(const ScenarioTemplate& tpl) {
    ValidationReport r;
    auto check_range = [&](const Range& x, const std::string& path, double lo, double hi) {
        if (!(std::isfinite(x.lo) && std::isfinite(x.hi) && x.lo <= x.hi && x.lo >= lo && x.hi <= hi)) {
            r.add("RANGE_INVALID", path, "range must be finite, non-empty and within [" + std::to_string(lo) + ", " +
                                             std::to_string(hi) + "]");
        }
    };
    auto check_int = [&](const IntRange& x, const std::string& path, int lo) {
        if (!(x.lo <= x.hi && x.lo >= lo)) r.add("RANGE_INVALID", path, "integer range must be non-empty and >= " + std::to_string(lo));
    };
    if (tpl.objectives.empty()) r.add("EMPTY_FIELD", "objectives", "no objective kinds");
    if (tpl.target_classes.empty()) r.add("EMPTY_FIELD", "target_classes", "no target classes");
    if (tpl.streets.empty()) r.add("EMPTY_FIELD", "streets", "no streets to place vehicles on");
    if (tpl.camera_pool.empty()) r.add("EMPTY_FIELD", "camera_pool", "no cameras");
    if (tpl.signature_landmarks.hi > 0 && tpl.landmark_classes.empty()) {
        r.add("EMPTY_FIELD", "landmark_classes", "signature landmarks need landmark classes");
    }
    auto check_classes = [&](const std::vector<ClassSpec>& v, const std::string& path) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto& c = v[i];
            const std::string p = index_path(path, i);
            if (c.class_name.empty()) r.add("EMPTY_FIELD", p + ".class", "class name empty");
            if (!(c.size.x > 0 && c.size.y > 0 && c.size.z > 0 && is_finite(c.size))) r.add("RANGE_INVALID", p + ".size", "size must be positive");
            for (const auto& [k, pool] : c.attribute_pools) {
                if (pool.empty()) r.add("EMPTY_FIELD", p + ".attribute_pools." + k, "empty attribute pool");
            }
        }
    };
    check_classes(tpl.target_classes, "target_classes");
    check_classes(tpl.landmark_classes, "landmark_classes");
    for (const auto& t : tpl.target_classes) {
        for (const auto& l : tpl.landmark_classes) {
            if (t.class_name == l.class_name) r.add("DUPLICATE_ID", "landmark_classes", "landmark class equals a target class");
        }
    }
    check_int(tpl.confusers, "confusers", 0);
    check_int(tpl.signature_landmarks, "signature_landmarks", 0);
    check_int(tpl.relations, "relations", 0);
    check_int(tpl.kozs, "kozs", 0);
    check_int(tpl.street_denial_kozs, "street_denial_kozs", 0);
    check_int(tpl.cameras, "cameras", 1);
    const auto& e = tpl.environment;
    check_range(e.snow, "environment.snow", 0, 1);
    check_range(e.rain, "environment.rain", 0, 1);
    check_range(e.fog, "environment.fog", 0, 1);
    check_range(e.wind_speed_norm, "environment.wind_speed_norm", 0, 1);
    check_range(e.foliage, "environment.foliage", 0, 1);
    check_range(e.camera_noise, "environment.camera_noise", 0, 1);
    check_range(e.wind_direction, "environment.wind_direction", -1e9, 1e9);
    check_range(e.time_of_day, "environment.time_of_day", 0, 24);
    check_range(tpl.uav_altitude, "uav_altitude", tpl.uav_kinematics.z_min, tpl.uav_kinematics.z_max);
    check_range(tpl.aoi_size, "aoi_size", 1e-3, 1e9);
    check_range(tpl.koz_size, "koz_size", 1e-3, 1e9);
    if (tpl.aoi_depth < 1 || tpl.aoi_depth > 6) r.add("RANGE_INVALID", "aoi_depth", "depth must be in [1, 6]");
    if (tpl.koz_size.hi >= std::min(tpl.world.bounds().width(), tpl.world.bounds().height())) {
        r.add("RANGE_INVALID", "koz_size", "KOZs must fit inside the world");
    }
    for (const auto& [name, v] : {std::pair{"min_confuser_separation", tpl.min_confuser_separation},
                                  std::pair{"min_route_length", tpl.min_route_length},
                                  std::pair{"route_band_width", tpl.route_band_width}, std::pair{"car_speed", tpl.car_speed},
                                  std::pair{"mission_duration", tpl.mission_duration}, std::pair{"tick_dt", tpl.tick_dt}}) {
        if (!(std::isfinite(v) && v > 0.0)) r.add("RANGE_INVALID", name, "must be positive");
    }
    for (std::size_t i = 0; i < tpl.obstacles.size(); ++i) {
        if (!(tpl.obstacles[i].height > 0.0)) r.add("OBSTACLE_INVALID", index_path("obstacles", i) + ".height", "height must be positive");
    }
    return r;
}

Json template_to_json(const ScenarioTemplate& tpl) {
    Json obstacles = Json::array();
    for (const auto& o : tpl.obstacles) obstacles.push_back(to_json(o));
    Json streets = Json::array();
    for (const auto& s : tpl.streets) streets.push_back(to_json(s));
    Json objectives = Json::array();
    for (const auto o : tpl.objectives) objectives.push_back(std::string(to_string(o)));
    Json targets = Json::array();
    for (const auto& c : tpl.target_classes) targets.push_back(class_to_json(c));
    Json landmarks = Json::array();
    for (const auto& c : tpl.landmark_classes) landmarks.push_back(class_to_json(c));
    Json cams = Json::array();
    for (const auto& c : tpl.camera_pool) cams.push_back(to_json(c));
    const auto& e = tpl.environment;
    const auto& k = tpl.uav_kinematics;
    return Json{
        {"schema_version", kSchemaVersion},
        {"name", tpl.name},
        {"world", to_json(tpl.world)},
        {"obstacles", obstacles},
        {"streets", streets},
        {"objectives", objectives},
        {"target_classes", targets},
        {"landmark_classes", landmarks},
        {"confusers", range_to_json(tpl.confusers)},
        {"signature_landmarks", range_to_json(tpl.signature_landmarks)},
        {"relations", range_to_json(tpl.relations)},
        {"kozs", range_to_json(tpl.kozs)},
        {"street_denial_kozs", range_to_json(tpl.street_denial_kozs)},
        {"environment",
         Json{{"snow", range_to_json(e.snow)},
              {"rain", range_to_json(e.rain)},
              {"fog", range_to_json(e.fog)},
              {"wind_speed_norm", range_to_json(e.wind_speed_norm)},
              {"foliage", range_to_json(e.foliage)},
              {"camera_noise", range_to_json(e.camera_noise)},
              {"wind_direction", range_to_json(e.wind_direction)},
              {"time_of_day", range_to_json(e.time_of_day)}}},
        {"uav_start_region", to_json(tpl.uav_start_region)},
        {"uav_altitude", range_to_json(tpl.uav_altitude)},
        {"uav_kinematics",
         Json{{"max_speed", k.max_speed}, {"max_yaw_rate", k.max_yaw_rate}, {"z_min", k.z_min}, {"z_max", k.z_max}}},
        {"camera_pool", cams},
        {"cameras", range_to_json(tpl.cameras)},
        {"aoi_depth", tpl.aoi_depth},
        {"aoi_size", range_to_json(tpl.aoi_size)},
        {"koz_size", range_to_json(tpl.koz_size)},
        {"min_confuser_separation", tpl.min_confuser_separation},
        {"min_route_length", tpl.min_route_length},
        {"route_band_width", tpl.route_band_width},
        {"car_speed", tpl.car_speed},
        {"mission_duration", tpl.mission_duration},
        {"tick_dt", tpl.tick_dt},
        {"relation_params",
         Json{{"next_to_max_dist", tpl.relation_params.next_to_max_dist},
              {"angle_tol", tpl.relation_params.angle_tol},
              {"on_top_z_tol", tpl.relation_params.on_top_z_tol}}},
    };
}

ScenarioTemplate template_from_json(const Json& j) {
    ObjectReader r(j, "");
    const std::string v = as_string(r.required("schema_version"), r.path_of("schema_version"));
    if (v != kSchemaVersion) throw Error("SCHEMA_VERSION", "unsupported schema version " + v, "schema_version");
    ScenarioTemplate t;
    t.name = as_string(r.required("name"), r.path_of("name"));
    t.world = polygon_from_json(r.required("world"), r.path_of("world"));
    auto each = [&](const std::string& key, auto&& fn) {
        const Json& arr = as_array(r.required(key), r.path_of(key));
        for (std::size_t i = 0; i < arr.size(); ++i) fn(arr[i], index_path(r.path_of(key), i));
    };
    each("obstacles", [&](const Json& x, const std::string& p) { t.obstacles.push_back(obstacle_from_json(x, p)); });
    each("streets", [&](const Json& x, const std::string& p) { t.streets.push_back(polygon_from_json(x, p)); });
    each("objectives", [&](const Json& x, const std::string& p) {
        try {
            t.objectives.push_back(parse_objective(as_string(x, p)));
        } catch (const Error& e) {
            throw Error(e.code(), e.what(), p);
        }
    });
    each("target_classes", [&](const Json& x, const std::string& p) { t.target_classes.push_back(class_from_json(x, p)); });
    each("landmark_classes", [&](const Json& x, const std::string& p) { t.landmark_classes.push_back(class_from_json(x, p)); });
    t.confusers = int_range_from_json(r.required("confusers"), r.path_of("confusers"));
    t.signature_landmarks = int_range_from_json(r.required("signature_landmarks"), r.path_of("signature_landmarks"));
    t.relations = int_range_from_json(r.required("relations"), r.path_of("relations"));
    t.kozs = int_range_from_json(r.required("kozs"), r.path_of("kozs"));
    t.street_denial_kozs = int_range_from_json(r.required("street_denial_kozs"), r.path_of("street_denial_kozs"));
    {
        ObjectReader er(r.required("environment"), r.path_of("environment"));
        auto& e = t.environment;
        e.snow = range_from_json(er.required("snow"), er.path_of("snow"));
        e.rain = range_from_json(er.required("rain"), er.path_of("rain"));
        e.fog = range_from_json(er.required("fog"), er.path_of("fog"));
        e.wind_speed_norm = range_from_json(er.required("wind_speed_norm"), er.path_of("wind_speed_norm"));
        e.foliage = range_from_json(er.required("foliage"), er.path_of("foliage"));
        e.camera_noise = range_from_json(er.required("camera_noise"), er.path_of("camera_noise"));
        e.wind_direction = range_from_json(er.required("wind_direction"), er.path_of("wind_direction"));
        e.time_of_day = range_from_json(er.required("time_of_day"), er.path_of("time_of_day"));
        er.finish();
    }
    t.uav_start_region = polygon_from_json(r.required("uav_start_region"), r.path_of("uav_start_region"));
    t.uav_altitude = range_from_json(r.required("uav_altitude"), r.path_of("uav_altitude"));
    {
        ObjectReader kr(r.required("uav_kinematics"), r.path_of("uav_kinematics"));
        auto& k = t.uav_kinematics;
        k.max_speed = as_double(kr.required("max_speed"), kr.path_of("max_speed"));
        k.max_yaw_rate = as_double(kr.required("max_yaw_rate"), kr.path_of("max_yaw_rate"));
        k.z_min = as_double(kr.required("z_min"), kr.path_of("z_min"));
        k.z_max = as_double(kr.required("z_max"), kr.path_of("z_max"));
        kr.finish();
    }
    each("camera_pool", [&](const Json& x, const std::string& p) { t.camera_pool.push_back(camera_from_json(x, p)); });
    t.cameras = int_range_from_json(r.required("cameras"), r.path_of("cameras"));
    t.aoi_depth = static_cast<int>(as_i64(r.required("aoi_depth"), r.path_of("aoi_depth")));
    t.aoi_size = range_from_json(r.required("aoi_size"), r.path_of("aoi_size"));
    t.koz_size = range_from_json(r.required("koz_size"), r.path_of("koz_size"));
    t.min_confuser_separation = as_double(r.required("min_confuser_separation"), r.path_of("min_confuser_separation"));
    t.min_route_length = as_double(r.required("min_route_length"), r.path_of("min_route_length"));
    t.route_band_width = as_double(r.required("route_band_width"), r.path_of("route_band_width"));
    t.car_speed = as_double(r.required("car_speed"), r.path_of("car_speed"));
    t.mission_duration = as_double(r.required("mission_duration"), r.path_of("mission_duration"));
    t.tick_dt = as_double(r.required("tick_dt"), r.path_of("tick_dt"));
    {
        ObjectReader pr(r.required("relation_params"), r.path_of("relation_params"));
        auto& p = t.relation_params;
        p.next_to_max_dist = as_double(pr.required("next_to_max_dist"), pr.path_of("next_to_max_dist"));
        p.angle_tol = as_double(pr.required("angle_tol"), pr.path_of("angle_tol"));
        p.on_top_z_tol = as_double(pr.required("on_top_z_tol"), pr.path_of("on_top_z_tol"));
        pr.finish();
    }
    r.finish();
    return t;
}

ScenarioTemplate deserialize_template(std::string_view bytes) { return template_from_json(parse_json(bytes)); }

std::string serialize(const ScenarioTemplate& tpl) { return canonical_document(template_to_json(tpl)); }

ScenarioTemplate suburban_grid_template(Objective objective) {
    ScenarioTemplate t;
    t.name = "suburban_grid";
    constexpr double kSize = 400.0;
    constexpr double kStreetHalf = 6.0;
    const double street_axes[] = {50.0, 150.0, 250.0, 350.0};
    t.world = Polygon::rectangle(0.0, 0.0, kSize, kSize);
    for (double a : street_axes) {
        t.streets.push_back(Polygon::rectangle(a - kStreetHalf, 0.0, a + kStreetHalf, kSize));
        t.streets.push_back(Polygon::rectangle(0.0, a - kStreetHalf, kSize, a + kStreetHalf));
    }
    Rng rng(20240501);
    for (std::size_t bx = 0; bx + 1 < std::size(street_axes); ++bx) {
        for (std::size_t by = 0; by + 1 < std::size(street_axes); ++by) {
            const double x0 = street_axes[bx] + kStreetHalf, x1 = street_axes[bx + 1] - kStreetHalf;
            const double y0 = street_axes[by] + kStreetHalf, y1 = street_axes[by + 1] - kStreetHalf;
            // Houses in the four corners of the block, set back from the streets.
            const double setback = 16.0, depth = 12.0, width = 10.0;
            const Polygon houses[] = {
                Polygon::rectangle(x0 + setback, y0 + setback, x0 + setback + depth, y0 + setback + width),
                Polygon::rectangle(x1 - setback - depth, y0 + setback, x1 - setback, y0 + setback + width),
                Polygon::rectangle(x1 - setback - depth, y1 - setback - width, x1 - setback, y1 - setback),
                Polygon::rectangle(x0 + setback, y1 - setback - width, x0 + setback + depth, y1 - setback),
            };
            for (const auto& h : houses) t.obstacles.push_back({h, rng.uniform(6.0, 9.0)});
            for (int k = 0; k < 2; ++k) {
                const Point2 c{rng.uniform(x0 + 34.0, x1 - 34.0), rng.uniform(y0 + 34.0, y1 - 34.0)};
                std::vector<Point2> crown;
                for (int s = 0; s < 8; ++s) crown.push_back(c + heading(45.0 * s) * 2.5);
                t.obstacles.push_back({Polygon(std::move(crown)), rng.uniform(10.0, 14.0)});
            }
        }
    }
    t.objectives = {objective};
    t.target_classes = {ClassSpec{"car",
                                  {4.5, 1.9, 1.5},
                                  {{"color", {"black", "blue", "gray", "red", "silver", "white"}},
                                   {"model", {"hatchback", "pickup", "sedan", "suv"}}}}};
    t.landmark_classes = {
        ClassSpec{"garage", {6.0, 6.0, 3.0}, {{"color", {"brown", "gray", "red", "white"}}}},
        ClassSpec{"shed", {3.0, 3.0, 2.5}, {{"color", {"brown", "green", "white"}}}},
        ClassSpec{"mailbox", {0.5, 0.5, 1.2}, {{"color", {"black", "blue", "white"}}}},
        ClassSpec{"trash_bin", {0.8, 0.8, 1.1}, {{"color", {"black", "blue", "green"}}}},
    };
    t.environment.snow = {0.0, 0.5};
    t.environment.rain = {0.0, 0.5};
    t.environment.fog = {0.0, 0.5};
    t.environment.wind_speed_norm = {0.0, 0.5};
    t.environment.foliage = {0.0, 1.0};
    t.environment.camera_noise = {0.0, 0.3};
    t.uav_start_region = Polygon::rectangle(20.0, 20.0, kSize - 20.0, kSize - 20.0);
    t.camera_pool = {CameraModel{60.0, 45.0, 150.0, -90.0, 0.0}, CameraModel{60.0, 45.0, 150.0, -45.0, 0.0}};
    return t;
}

ScenarioPair sample_scenario(const ScenarioTemplate& tpl, std::uint64_t seed) {
    const auto rep = validate_template(tpl);
    if (!rep.ok()) {
        const auto& f = rep.findings.front();
        throw Error("INVALID_TEMPLATE", f.code + ": " + f.message, f.path);
    }
    for (int attempt = 0; attempt < kMaxSamplingRetries; ++attempt) {
        Rng rng(derive_seed(seed, 0x5343454e, static_cast<std::uint64_t>(attempt)));
        if (auto pair = sample_once(tpl, rng)) return std::move(*pair);
    }
    throw Error("SAMPLING_EXHAUSTED", "no feasible placement after " + std::to_string(kMaxSamplingRetries) + " attempts");
}

AreaPriorMap decompose_aoi(const AreaOfInterest& aoi, int depth, const Point2& target, std::uint64_t seed) {
    if (depth < 1 || depth > 10) throw Error("INVALID_DEPTH", "depth must be in [1, 10]");
    if (!aoi.polygon.is_convex()) throw Error("NONCONVEX_AOI", "AOI '" + aoi.id + "' is not convex");
    if (!point_in_polygon(target, aoi.polygon)) throw Error("INVALID_TARGET", "target lies outside AOI '" + aoi.id + "'");
    const Aabb2& b = aoi.polygon.bounds();
    const int n = 1 << depth;
    const double min_area = 1e-9 * aoi.polygon.area();
    AreaPriorMap map;
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            const double x0 = b.min.x + b.width() * ix / n, x1 = ix + 1 == n ? b.max.x : b.min.x + b.width() * (ix + 1) / n;
            const double y0 = b.min.y + b.height() * iy / n, y1 = iy + 1 == n ? b.max.y : b.min.y + b.height() * (iy + 1) / n;
            const auto cell = Polygon::rectangle(x0, y0, x1, y1);
            auto ring = clip_to_convex(cell.vertices(), aoi.polygon);
            if (ring.size() < 3 || std::fabs(signed_area(ring)) <= min_area) continue;
            try {
                map.cells.push_back({Polygon(std::move(ring)), 0.0});
            } catch (const Error&) {
            }
        }
    }
    const int target_cell = prior_cell_index(map, target);
    if (target_cell < 0) throw Error("INVALID_TARGET", "target is not covered by any cell");
    Rng rng(seed);
    double sum = 0.0;
    for (auto& c : map.cells) {
        c.prob = -std::log(1.0 - rng.uniform());
        sum += c.prob;
    }
    if (!(sum > 0.0)) {
        for (auto& c : map.cells) c.prob = 1.0;
        sum = static_cast<double>(map.cells.size());
    }
    for (auto& c : map.cells) c.prob /= sum;
    const auto top = std::max_element(map.cells.begin(), map.cells.end(),
                                      [](const PriorCell& a, const PriorCell& b) { return a.prob < b.prob; });
    std::swap(top->prob, map.cells[static_cast<std::size_t>(target_cell)].prob);
    return map;
}

std::uint64_t item_seed(std::uint64_t base_seed, std::size_t index, std::uint64_t attempt) {
    return derive_seed(base_seed, 0x4954454d, index, attempt);
}

std::string content_hash(const std::string& mission_bytes, const std::string& config_bytes) {
    return sha256_hex(mission_bytes + config_bytes);
}

Json DatasetManifest::to_json() const {
    Json entries_j = Json::array();
    for (const auto& e : entries) {
        entries_j.push_back(Json{{"id", e.id},
                                 {"seed", e.seed},
                                 {"mission_path", e.mission_path},
                                 {"config_path", e.config_path},
                                 {"content_hash", e.content_hash}});
    }
    Json failures_j = Json::array();
    for (const auto& f : failures) failures_j.push_back(Json{{"index", f.index}, {"seed", f.seed}, {"reason", f.reason}});
    return Json{{"schema_version", kSchemaVersion}, {"base_seed", base_seed}, {"template_hash", template_hash},
                {"entries", entries_j},               {"failures", failures_j}};
}

DatasetManifest DatasetManifest::from_json(const Json& j) {
    ObjectReader r(j, "");
    if (as_string(r.required("schema_version"), r.path_of("schema_version")) != kSchemaVersion) {
        throw Error("SCHEMA_VERSION", "unsupported manifest schema", "schema_version");
    }
    DatasetManifest m;
    m.base_seed = as_u64(r.required("base_seed"), r.path_of("base_seed"));
    m.template_hash = as_string(r.required("template_hash"), r.path_of("template_hash"));
    const Json& entries = as_array(r.required("entries"), r.path_of("entries"));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        ObjectReader er(entries[i], index_path("entries", i));
        ManifestEntry e;
        e.id = as_string(er.required("id"), er.path_of("id"));
        e.seed = as_u64(er.required("seed"), er.path_of("seed"));
        e.mission_path = as_string(er.required("mission_path"), er.path_of("mission_path"));
        e.config_path = as_string(er.required("config_path"), er.path_of("config_path"));
        e.content_hash = as_string(er.required("content_hash"), er.path_of("content_hash"));
        er.finish();
        m.entries.push_back(std::move(e));
    }
    const Json& failures = as_array(r.required("failures"), r.path_of("failures"));
    for (std::size_t i = 0; i < failures.size(); ++i) {
        ObjectReader fr(failures[i], index_path("failures", i));
        ManifestFailure f;
        f.index = as_u64(fr.required("index"), fr.path_of("index"));
        f.seed = as_u64(fr.required("seed"), fr.path_of("seed"));
        f.reason = as_string(fr.required("reason"), fr.path_of("reason"));
        fr.finish();
        m.failures.push_back(std::move(f));
    }
    r.finish();
    return m;
}

std::string DatasetManifest::hash() const { return sha256_hex(canonical_document(to_json())); }

namespace {

void write_file(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("IO_ERROR", "cannot write " + p.string());
}

std::string item_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scn_%06zu", i);
    return buf;
}

}  // namespace

DatasetManifest generate_dataset(const ScenarioTemplate& tpl, std::size_t n, std::uint64_t base_seed,
                                 const std::filesystem::path& out_dir, unsigned workers) {
    const auto rep = validate_template(tpl);
    if (!rep.ok()) {
        const auto& f = rep.findings.front();
        throw Error("INVALID_TEMPLATE", f.code + ": " + f.message, f.path);
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) throw Error("IO_ERROR", "cannot create " + out_dir.string());

    std::vector<ManifestEntry> entries(n);
    std::vector<std::vector<ManifestFailure>> failures(n);
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                for (std::uint64_t attempt = 0;; ++attempt) {
                    if (attempt >= static_cast<std::uint64_t>(kMaxSamplingRetries)) {
                        throw Error("SAMPLING_EXHAUSTED", "item " + std::to_string(i) + " has no feasible seed");
                    }
                    const std::uint64_t seed = item_seed(base_seed, i, attempt);
                    std::optional<ScenarioPair> pair;
                    try {
                        pair = sample_scenario(tpl, seed);
                    } catch (const Error& e) {
                        if (e.code() != "SAMPLING_EXHAUSTED") throw;
                        failures[i].push_back({i, seed, e.code()});
                        continue;
                    }
                    const std::string id = item_id(i);
                    const std::string mission = serialize(pair->mission);
                    const std::string config = serialize(pair->config);
                    const auto dir = out_dir / id;
                    std::filesystem::create_directories(dir, ec);
                    write_file(dir / "mission.json", mission);
                    write_file(dir / "sim_config.json", config);
                    entries[i] = {id, seed, id + "/mission.json", id + "/sim_config.json", content_hash(mission, config)};
                    break;
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next = n;
            }
        }
    };
    const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < count; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    DatasetManifest m;
    m.base_seed = base_seed;
    m.template_hash = sha256_hex(serialize(tpl));
    m.entries = std::move(entries);
    for (auto& f : failures) m.failures.insert(m.failures.end(), f.begin(), f.end());
    write_file(out_dir / "manifest.json", canonical_document(m.to_json()));
    return m;
}

}  // namespace mforge
