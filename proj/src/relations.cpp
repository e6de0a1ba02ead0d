#include "mforge/relations.hpp"

#include <algorithm>
#include <cctype>

#include "mforge/error.hpp"

namespace mforge {

namespace {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

// Angular slack (degrees) added to angle_tol, the analogue of kBoundaryEps.
constexpr double kAngleEpsDeg = 1e-9;

bool bearing_near(const SceneEntity& target, const SceneEntity& related, double heading, double tol) {
    const Point2 c = related.bbox.center.xy();
    if (distance(c, target.pose.position.xy()) < 1e-9) return false;
    return circular_diff_deg(relative_bearing(target.pose, c), heading) <= tol + kAngleEpsDeg;
}

const SceneEntity& require(const SceneSnapshot& scene, const std::string& id) {
    const SceneEntity* e = scene.find(id);
    if (!e) throw Error("MISSING_ENTITY", "no entity '" + id + "' in scene");
    return *e;
}

}  // namespace

const SceneEntity* SceneSnapshot::find(std::string_view id) const {
    for (const auto& e : entities) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

SceneTimeline::SceneTimeline(std::vector<SceneSnapshot> snapshots) : snapshots_(std::move(snapshots)) {
    if (snapshots_.empty()) throw Error("INVALID_TIMELINE", "timeline is empty");
    for (std::size_t i = 1; i < snapshots_.size(); ++i) {
        if (!(snapshots_[i].time > snapshots_[i - 1].time)) {
            throw Error("INVALID_TIMELINE", "snapshot times must strictly increase");
        }
    }
}

SceneEntity entity_state_at(const EntitySpec& e, double t) {
    SceneEntity se{e.id, e.class_name, e.attributes, e.initial_pose, e.bbox};
    if (e.trajectory) {
        const Pose p = e.trajectory->pose_at(t);
        const double dyaw = p.yaw - e.initial_pose.yaw;
        const Point2 offset =
            rotate_about(e.bbox.center.xy(), e.initial_pose.position.xy(), dyaw) - e.initial_pose.position.xy();
        se.pose = p;
        se.bbox.center = {p.position.x + offset.x, p.position.y + offset.y,
                          e.bbox.center.z + (p.position.z - e.initial_pose.position.z)};
        se.bbox.yaw = normalize_deg(e.bbox.yaw + dyaw);
    }
    return se;
}

SceneSnapshot scene_at(const SimulationConfig& cfg, double t) {
    SceneSnapshot s;
    s.time = t;
    s.obstacles = cfg.obstacles;
    s.entities.reserve(cfg.entities.size());
    for (const auto& e : cfg.entities) s.entities.push_back(entity_state_at(e, t));
    return s;
}

SceneTimeline timeline_of(const SimulationConfig& cfg, double horizon, double step) {
    std::vector<SceneSnapshot> snaps;
    const auto n = static_cast<std::size_t>(std::floor(horizon / step + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) snaps.push_back(scene_at(cfg, static_cast<double>(k) * step));
    return SceneTimeline(std::move(snaps));
}

bool matches_related(const SymbolicRelation& rel, const SceneEntity& e) {
    if (!iequals(rel.related_class, e.class_name)) return false;
    for (const auto& [k, v] : rel.related_attributes) {
        const auto it = e.attributes.find(k);
        if (it == e.attributes.end() || it->second != v) return false;
    }
    return true;
}

bool eval_spatial(SpatialOp op, const SceneEntity& target, const SceneEntity& related,
                  std::span<const ExtrudedObstacle> obstacles, const RelationParams& params) {
    switch (op) {
        case SpatialOp::NextTo:
            return distance(target.bbox.center.xy(), related.bbox.center.xy()) < params.next_to_max_dist &&
                   line_of_sight(target.bbox.center, related.bbox.center, obstacles);
        case SpatialOp::NotNextTo:
            return !eval_spatial(SpatialOp::NextTo, target, related, obstacles, params);
        case SpatialOp::OnTopOf:
            return std::fabs(target.bbox.min_z() - related.bbox.max_z()) <= params.on_top_z_tol &&
                   polygons_intersect(target.bbox.footprint(), related.bbox.footprint());
        case SpatialOp::NotOnTopOf:
            return !eval_spatial(SpatialOp::OnTopOf, target, related, obstacles, params);
        case SpatialOp::OrthogonalTo:
            return bearing_near(target, related, kLeftOfDeg, params.angle_tol) ||
                   bearing_near(target, related, kRightOfDeg, params.angle_tol);
        case SpatialOp::InFrontOf:
            return bearing_near(target, related, kInFrontOfDeg, params.angle_tol);
        case SpatialOp::RightOf:
            return bearing_near(target, related, kRightOfDeg, params.angle_tol);
        case SpatialOp::LeftOf:
            return bearing_near(target, related, kLeftOfDeg, params.angle_tol);
        case SpatialOp::PartOf: {
            if (!iequals(related.class_name, kGroupClass)) return false;
            const auto it = target.attributes.find(kMemberOfAttribute);
            return it != target.attributes.end() && it->second == related.id;
        }
    }
    throw Error("UNKNOWN_OPERATOR", "unhandled operator");
}

bool eval_relation(const SymbolicRelation& rel, const std::string& related_id, const SceneSnapshot& scene,
                   const RelationParams& params) {
    if (rel.op.temporal_depth > 1) throw Error("INVALID_NESTING", rel.op.name() + " nests a temporal operator");
    const SceneEntity& target = require(scene, rel.target_id);
    const SceneEntity& related = require(scene, related_id);
    if (!matches_related(rel, related)) return false;
    return eval_spatial(rel.op.op, target, related, scene.obstacles, params);
}

bool eval_eventually(const SymbolicRelation& rel, const std::string& related_id, const SceneTimeline& timeline,
                     const RelationParams& params) {
    if (rel.op.temporal_depth > 1) throw Error("INVALID_NESTING", rel.op.name() + " nests a temporal operator");
    if (rel.op.temporal_depth == 0) throw Error("NOT_TEMPORAL", rel.op.name() + " is not an EVENTUALLY_ operator");
    for (const auto& snap : timeline.snapshots()) {
        if (eval_relation(rel, related_id, snap, params)) return true;
    }
    return false;
}

std::vector<ExtractedRelation> extract_relations(const std::string& target_id, const SceneSnapshot& scene,
                                                 const RelationParams& params) {
    const SceneEntity& target = require(scene, target_id);
    std::vector<const SceneEntity*> others;
    for (const auto& e : scene.entities) {
        if (e.id != target_id) others.push_back(&e);
    }
    std::sort(others.begin(), others.end(), [](const SceneEntity* a, const SceneEntity* b) { return a->id < b->id; });

    std::vector<SpatialOp> ops(std::begin(kAllSpatialOps), std::end(kAllSpatialOps));
    std::sort(ops.begin(), ops.end(), [](SpatialOp a, SpatialOp b) { return to_string(a) < to_string(b); });

    std::vector<ExtractedRelation> out;
    for (const SceneEntity* rel : others) {
        for (SpatialOp op : ops) {
            if (eval_spatial(op, target, *rel, scene.obstacles, params)) {
                out.push_back({rel->id, SymbolicRelation{rel->class_name, RelationOperator{op, 0}, target_id, rel->attributes}});
            }
        }
    }
    return out;
}

Disambiguation disambiguate(std::span<const Candidate> candidates, std::span<const SymbolicRelation> relations,
                            const SceneTimeline& timeline, const RelationParams& params) {
    if (candidates.empty()) throw Error("EMPTY_CANDIDATES", "no candidates to rank");
    Disambiguation out;
    out.vacuous = relations.empty();
    const SceneSnapshot& first = timeline.front();
    for (const auto& c : candidates) {
        require(first, c.entity_id);
        std::size_t satisfied = 0;
        for (const auto& rel : relations) {
            if (rel.op.temporal_depth > 1) throw Error("INVALID_NESTING", rel.op.name() + " nests a temporal operator");
            SymbolicRelation r = rel;
            r.target_id = c.entity_id;
            bool ok = false;
            for (const auto& e : first.entities) {
                if (e.id == c.entity_id || !matches_related(r, e)) continue;
                ok = r.op.eventually() ? eval_eventually(r, e.id, timeline, params) : eval_relation(r, e.id, first, params);
                if (ok) break;
            }
            if (ok) ++satisfied;
        }
        const double score = relations.empty() ? 1.0 : static_cast<double>(satisfied) / static_cast<double>(relations.size());
        out.ranking.push_back({c.entity_id, score});
    }
    std::sort(out.ranking.begin(), out.ranking.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.entity_id < b.entity_id;
    });
    return out;
}

Disambiguation disambiguate(std::span<const Candidate> candidates, std::span<const SymbolicRelation> relations,
                            const SceneSnapshot& scene, const RelationParams& params) {
    return disambiguate(candidates, relations, SceneTimeline({scene}), params);
}

}  // namespace mforge
