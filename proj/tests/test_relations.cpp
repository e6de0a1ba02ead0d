#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cctype>

#include "fixtures.hpp"
#include "mforge/error.hpp"
#include "mforge/relations.hpp"
#include "oracles.hpp"

using namespace mforge;

namespace {

SceneEntity as_scene(const EntitySpec& e) { return {e.id, e.class_name, e.attributes, e.initial_pose, e.bbox}; }

SymbolicRelation rel(const std::string& cls, const std::string& op, const std::string& target, Attributes attrs = {}) {
    return {cls, RelationOperator::parse(op), target, std::move(attrs)};
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// Independent restatement of the operator semantics.
bool oracle_holds(SpatialOp op, const SceneEntity& t, const SceneEntity& r, const std::vector<ExtrudedObstacle>& obs) {
    auto directional = [&](double heading) {
        const Point2 c = r.bbox.center.xy();
        if (std::hypot(c.x - t.pose.position.x, c.y - t.pose.position.y) < 1e-9) return false;
        return oracle::ang_diff(oracle::body_bearing(t.pose, c), heading) <= 15.0;
    };
    switch (op) {
        case SpatialOp::NextTo:
            return std::hypot(t.bbox.center.x - r.bbox.center.x, t.bbox.center.y - r.bbox.center.y) < 10.0 &&
                   oracle::los_sampled(t.bbox.center, r.bbox.center, obs, 0.02);
        case SpatialOp::NotNextTo:
            return !oracle_holds(SpatialOp::NextTo, t, r, obs);
        case SpatialOp::OnTopOf:
            return std::fabs(t.bbox.min_z() - r.bbox.max_z()) <= 0.25 &&
                   oracle::convex_overlap(oracle::box_corners(t.bbox), oracle::box_corners(r.bbox));
        case SpatialOp::NotOnTopOf:
            return !oracle_holds(SpatialOp::OnTopOf, t, r, obs);
        case SpatialOp::OrthogonalTo:
            return directional(90.0) || directional(270.0);
        case SpatialOp::InFrontOf:
            return directional(180.0);
        case SpatialOp::RightOf:
            return directional(270.0);
        case SpatialOp::LeftOf:
            return directional(90.0);
        case SpatialOp::PartOf: {
            const auto it = t.attributes.find("member_of");
            return lower(r.class_name) == "group" && it != t.attributes.end() && it->second == r.id;
        }
    }
    return false;
}

SceneSnapshot garage_scene() {
    SceneSnapshot s;
    auto car = fixture::car("car_123", 0, 0, 0);
    s.entities.push_back(as_scene(car));
    // Bearing 270 in the car frame is the -y direction.
    s.entities.push_back(as_scene(fixture::structure("garage_1", "garage", 0, -6, {{"color", "white"}})));
    return s;
}

}  // namespace

TEST_CASE("eval_relation examples") {
    const auto s = garage_scene();
    CHECK(eval_relation(rel("garage", "RIGHT_OF", "car_123"), "garage_1", s));
    CHECK(eval_relation(rel("Garage", "RIGHT_OF", "car_123", {{"color", "white"}}), "garage_1", s));
    CHECK_FALSE(eval_relation(rel("garage", "RIGHT_OF", "car_123", {{"color", "red"}}), "garage_1", s));
    CHECK_FALSE(eval_relation(rel("garage", "LEFT_OF", "car_123"), "garage_1", s));
    CHECK(eval_relation(rel("garage", "ORTHOGONAL_TO", "car_123"), "garage_1", s));
    CHECK(eval_relation(rel("garage", "NEXT_TO", "car_123"), "garage_1", s));
    CHECK_FALSE(eval_relation(rel("garage", "NOT_NEXT_TO", "car_123"), "garage_1", s));

    auto blocked = s;
    blocked.obstacles.push_back({Polygon::rectangle(-3, -4, 3, -3), 10});
    CHECK_FALSE(eval_relation(rel("garage", "NEXT_TO", "car_123"), "garage_1", blocked));
    CHECK(eval_relation(rel("garage", "RIGHT_OF", "car_123"), "garage_1", blocked));

    SceneSnapshot stack;
    SceneEntity top{"box_t", "box", {}, Pose({0, 0, 3}, 0), BoundingBox3{{0, 0, 3.5}, {1, 1, 0.5}, 0}};
    SceneEntity base{"box_b", "box", {}, Pose({0.5, 0, 0}, 0), BoundingBox3{{0.5, 0, 1.5}, {1, 1, 1.5}, 0}};
    stack.entities = {top, base};
    CHECK(eval_relation(rel("box", "ON_TOP_OF", "box_t"), "box_b", stack));
    stack.entities[1].bbox.center.x = 3.0;
    CHECK_FALSE(eval_relation(rel("box", "ON_TOP_OF", "box_t"), "box_b", stack));

    SceneSnapshot front = garage_scene();
    front.entities[1].bbox.center = {-6, 0, 1.5};
    CHECK(eval_relation(rel("garage", "IN_FRONT_OF", "car_123"), "garage_1", front));

    CHECK_THROWS_AS(eval_relation(rel("garage", "RIGHT_OF", "car_123"), "nobody", s), Error);
}

TEST_CASE("PART_OF uses group membership") {
    SceneSnapshot s;
    auto car = fixture::car("car_1", 0, 0, 0, {{"member_of", "fleet_a"}});
    s.entities.push_back(as_scene(car));
    s.entities.push_back(as_scene(fixture::structure("fleet_a", "Group", 50, 50)));
    s.entities.push_back(as_scene(fixture::structure("fleet_b", "group", 50, 50)));
    CHECK(eval_relation(rel("group", "PART_OF", "car_1"), "fleet_a", s));
    CHECK_FALSE(eval_relation(rel("group", "PART_OF", "car_1"), "fleet_b", s));
}

TEST_CASE("eval_eventually scans every snapshot") {
    auto at = [](double t, double gx) {
        SceneSnapshot s = garage_scene();
        s.time = t;
        s.entities[1].bbox.center.x = gx;
        return s;
    };
    const auto r = rel("garage", "EVENTUALLY_NEXT_TO", "car_123");
    CHECK(eval_eventually(r, "garage_1", SceneTimeline({at(0, 40), at(50, 0)})));
    CHECK_FALSE(eval_eventually(r, "garage_1", SceneTimeline({at(0, 40), at(50, 30)})));
    std::vector<SceneSnapshot> snaps;
    for (int k = 0; k < 20; ++k) snaps.push_back(at(k, k == 19 ? 0.0 : 40.0));
    CHECK(eval_eventually(r, "garage_1", SceneTimeline(snaps)));

    CHECK_THROWS_WITH_AS(eval_eventually(rel("garage", "EVENTUALLY_EVENTUALLY_NEXT_TO", "car_123"), "garage_1",
                                         SceneTimeline({at(0, 0)})),
                         doctest::Contains("EVENTUALLY"), Error);
    CHECK_THROWS_AS(eval_eventually(rel("garage", "NEXT_TO", "car_123"), "garage_1", SceneTimeline({at(0, 0)})), Error);
    CHECK_THROWS_AS(SceneTimeline({at(1, 0), at(1, 0)}), Error);
    CHECK_THROWS_AS(SceneTimeline(std::vector<SceneSnapshot>{}), Error);
}

TEST_CASE("extract_relations examples") {
    const auto found = extract_relations("car_123", garage_scene());
    const auto it = std::find_if(found.begin(), found.end(), [](const ExtractedRelation& e) {
        return e.relation.op.op == SpatialOp::RightOf;
    });
    REQUIRE(it != found.end());
    CHECK(it->related_id == "garage_1");
    CHECK(it->relation.related_class == "garage");
    CHECK(it->relation.related_attributes.at("color") == "white");
    CHECK(it->relation.to_string() == "[garage][RIGHT_OF][car_123][color: white]");

    SceneSnapshot alone;
    alone.entities.push_back(as_scene(fixture::car("car_123", 0, 0, 0)));
    CHECK(extract_relations("car_123", alone).empty());
    CHECK_THROWS_AS(extract_relations("ghost", alone), Error);
}

TEST_CASE("extract_relations equals brute force and the independent oracle") {
    std::mt19937_64 g(2024);
    std::uniform_int_distribution<int> count(1, 6);
    for (int trial = 0; trial < 300; ++trial) {
        const auto scene = fixture::random_scene(g, count(g));
        const auto& target = scene.entities[0];
        const auto got = extract_relations(target.id, scene);
        std::vector<ExtractedRelation> brute;
        for (const auto& e : scene.entities) {
            if (e.id == target.id) continue;
            for (SpatialOp op : kAllSpatialOps) {
                const SymbolicRelation r{e.class_name, RelationOperator{op, 0}, target.id, e.attributes};
                const bool v = eval_relation(r, e.id, scene);
                REQUIRE(v == oracle_holds(op, target, e, scene.obstacles));
                if (v) brute.push_back({e.id, r});
            }
        }
        std::sort(brute.begin(), brute.end(), [](const ExtractedRelation& a, const ExtractedRelation& b) {
            return std::tie(a.related_id, a.relation.op) < std::tie(b.related_id, b.relation.op);
        });
        REQUIRE(got == brute);
    }
}

TEST_CASE("relation invariants on random scenes") {
    std::mt19937_64 g(77);
    std::uniform_real_distribution<double> ang(0, 360), sh(-500, 500);
    const RelationParams params;
    for (int trial = 0; trial < 300; ++trial) {
        const auto scene = fixture::random_scene(g, 6);
        const auto moved = fixture::moved(scene, ang(g), {sh(g), sh(g)});
        const auto& t = scene.entities[0];
        for (std::size_t i = 1; i < scene.entities.size(); ++i) {
            const auto& r = scene.entities[i];
            const bool left = eval_spatial(SpatialOp::LeftOf, t, r, scene.obstacles, params);
            const bool right = eval_spatial(SpatialOp::RightOf, t, r, scene.obstacles, params);
            const bool orth = eval_spatial(SpatialOp::OrthogonalTo, t, r, scene.obstacles, params);
            if (left || right) REQUIRE(orth);
            REQUIRE(eval_spatial(SpatialOp::NextTo, t, r, scene.obstacles, params) !=
                    eval_spatial(SpatialOp::NotNextTo, t, r, scene.obstacles, params));
            REQUIRE(eval_spatial(SpatialOp::OnTopOf, t, r, scene.obstacles, params) !=
                    eval_spatial(SpatialOp::NotOnTopOf, t, r, scene.obstacles, params));
            for (SpatialOp op : kAllSpatialOps) {
                INFO(to_string(op));
                REQUIRE(eval_spatial(op, t, r, scene.obstacles, params) ==
                        eval_spatial(op, moved.entities[0], moved.entities[i], moved.obstacles, params));
            }
        }
    }
}

TEST_CASE("disambiguate examples") {
    SceneSnapshot s;
    s.entities.push_back(as_scene(fixture::car("car_a", 0, 0, 0)));
    s.entities.push_back(as_scene(fixture::car("car_b", 100, 0, 0)));
    s.entities.push_back(as_scene(fixture::structure("garage_1", "garage", 0, -6, {{"color", "white"}})));
    const std::vector<Candidate> cands{{"car_b", {}}, {"car_a", {}}};
    const std::vector<SymbolicRelation> one{rel("garage", "RIGHT_OF", "car_a", {{"color", "white"}})};
    auto d = disambiguate(cands, one, s);
    REQUIRE(d.ranking.size() == 2);
    CHECK(d.ranking[0].entity_id == "car_a");
    CHECK(d.ranking[0].score == 1.0);
    CHECK(d.ranking[1].score == 0.0);
    CHECK_FALSE(d.vacuous);

    d = disambiguate(cands, std::vector<SymbolicRelation>{}, s);
    CHECK(d.vacuous);
    CHECK(d.ranking[0].score == 1.0);
    CHECK(d.ranking[1].score == 1.0);
    CHECK(d.ranking[0].entity_id == "car_a");

    // Two of three relations hold for car_a: RIGHT_OF and NEXT_TO, but not LEFT_OF.
    const std::vector<SymbolicRelation> three{rel("garage", "RIGHT_OF", "car_a"), rel("garage", "NEXT_TO", "car_a"),
                                              rel("garage", "LEFT_OF", "car_a")};
    int expected = 0;
    for (const auto& r : three) expected += eval_relation(r, "garage_1", s) ? 1 : 0;
    CHECK(expected == 2);
    d = disambiguate(cands, three, s);
    CHECK(d.ranking[0].entity_id == "car_a");
    CHECK(d.ranking[0].score == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    CHECK_THROWS_AS(disambiguate(std::vector<Candidate>{}, one, s), Error);
}

TEST_CASE("disambiguate is invariant to candidate order") {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto scene = fixture::random_scene(g, 6);
        std::vector<Candidate> cands;
        for (const auto& e : scene.entities) cands.push_back({e.id, e.attributes});
        std::vector<SymbolicRelation> rels;
        for (const auto& x : extract_relations(scene.entities[0].id, scene)) {
            if (rels.size() < 3) rels.push_back(x.relation);
        }
        const auto base = disambiguate(cands, rels, scene);
        std::shuffle(cands.begin(), cands.end(), g);
        const auto again = disambiguate(cands, rels, scene);
        REQUIRE(base.ranking.size() == again.ranking.size());
        for (std::size_t i = 0; i < base.ranking.size(); ++i) {
            REQUIRE(base.ranking[i].entity_id == again.ranking[i].entity_id);
            REQUIRE(base.ranking[i].score == again.ranking[i].score);
        }
    }
}
