#pragma once

#include <span>
#include <string>
#include <vector>

#include "mforge/scenario.hpp"

namespace mforge {

/// Tolerances for the relation operators. Angles in degrees, lengths in meters.
struct RelationParams {
    double next_to_max_dist = 10.0;
    double angle_tol = 15.0;
    double on_top_z_tol = 0.25;
};

/// Reference headings (bearing from the target's body frame) of the directional operators.
inline constexpr double kLeftOfDeg = 90.0;
inline constexpr double kInFrontOfDeg = 180.0;
inline constexpr double kRightOfDeg = 270.0;

/// Class name marking abstract group entities that PART_OF relations refer to.
inline constexpr const char* kGroupClass = "group";
/// Target attribute naming the group entity the target belongs to.
inline constexpr const char* kMemberOfAttribute = "member_of";

/// Snapshot spacing (seconds) of the timelines used to evaluate EVENTUALLY_ relations.
inline constexpr double kRelationTimelineStep = 1.0;

struct SceneEntity {
    std::string id;
    std::string class_name;
    Attributes attributes;
    Pose pose;
    BoundingBox3 bbox;
};

struct SceneSnapshot {
    double time = 0.0;
    std::vector<SceneEntity> entities;
    std::vector<ExtrudedObstacle> obstacles;

    const SceneEntity* find(std::string_view id) const;
};

/// Snapshots with strictly increasing times. Throws INVALID_TIMELINE otherwise.
class SceneTimeline {
public:
    explicit SceneTimeline(std::vector<SceneSnapshot> snapshots);
    const std::vector<SceneSnapshot>& snapshots() const { return snapshots_; }
    const SceneSnapshot& front() const { return snapshots_.front(); }

private:
    std::vector<SceneSnapshot> snapshots_;
};

/// State of a configured entity at time t: trajectory pose, with the
/// bounding box carried rigidly from its initial placement.
SceneEntity entity_state_at(const EntitySpec& e, double t);

/// Ground-truth scene of a simulation config at time t (trajectories
/// interpolated, bounding boxes carried rigidly with their entity).
SceneSnapshot scene_at(const SimulationConfig& cfg, double t);
/// Snapshots at t = 0, step, 2 step, ... up to `horizon` (inclusive).
SceneTimeline timeline_of(const SimulationConfig& cfg, double horizon, double step);

/// Case-insensitive class comparison plus subset match of the relation's attributes.
bool matches_related(const SymbolicRelation& rel, const SceneEntity& e);

/// Truth of a single (non-temporal) operator between two scene entities.
bool eval_spatial(SpatialOp op, const SceneEntity& target, const SceneEntity& related,
                  std::span<const ExtrudedObstacle> obstacles, const RelationParams& params);

/// Evaluates `rel` with `related_id` as the related entity. False when the
/// related entity does not match the relation's class/attributes. An
/// EVENTUALLY_ operator is evaluated over the single snapshot. Throws
/// MISSING_ENTITY, INVALID_NESTING.
bool eval_relation(const SymbolicRelation& rel, const std::string& related_id, const SceneSnapshot& scene,
                   const RelationParams& params = {});

/// True iff the embedded spatial relation holds at >= 1 snapshot. Throws
/// INVALID_NESTING for EVENTUALLY_EVENTUALLY_*, NOT_TEMPORAL for plain operators.
bool eval_eventually(const SymbolicRelation& rel, const std::string& related_id, const SceneTimeline& timeline,
                     const RelationParams& params = {});

struct ExtractedRelation {
    std::string related_id;
    SymbolicRelation relation;

    friend bool operator==(const ExtractedRelation&, const ExtractedRelation&) = default;
};

/// Every true (related entity, operator) pair for the target, over all
/// non-temporal operators. Ordered by related id, then operator name.
std::vector<ExtractedRelation> extract_relations(const std::string& target_id, const SceneSnapshot& scene,
                                                 const RelationParams& params = {});

struct Candidate {
    std::string entity_id;
    Attributes attributes;
};

struct RankedCandidate {
    std::string entity_id;
    double score = 0.0;
};

struct Disambiguation {
    std::vector<RankedCandidate> ranking;
    bool vacuous = false;  // no relations were given; every score is 1
};

/// Scores each candidate by the fraction of relations satisfied with the
/// candidate as target. A relation is satisfied when some scene entity
/// matching its related class/attributes (other than the candidate) makes it
/// true: spatial operators at the first snapshot, EVENTUALLY_ operators at any
/// snapshot. Ranked by descending score, ties by entity id.
Disambiguation disambiguate(std::span<const Candidate> candidates, std::span<const SymbolicRelation> relations,
                            const SceneTimeline& timeline, const RelationParams& params = {});
Disambiguation disambiguate(std::span<const Candidate> candidates, std::span<const SymbolicRelation> relations,
                            const SceneSnapshot& scene, const RelationParams& params = {});

}  // namespace mforge
