#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>
#include <random>

#include "fixtures.hpp"
#include "mforge/codec.hpp"
#include "mforge/error.hpp"
#include "mforge/json_io.hpp"
#include "mforge/randomizer.hpp"
#include "oracles.hpp"

using namespace mforge;

namespace {

std::string error_code(const std::function<void()>& f, std::string* path = nullptr) {
    try {
        f();
    } catch (const Error& e) {
        if (path) *path = e.path();
        return e.code();
    }
    return "";
}

MissionDescription prior_mission() {
    auto md = fixture::area_mission();
    AreaPriorMap pm;
    pm.cells = {{Polygon::rectangle(0, 0, 100, 100), 0.25},
                {Polygon::rectangle(100, 0, 200, 100), 0.25},
                {Polygon::rectangle(0, 100, 100, 200), 0.25},
                {Polygon::rectangle(100, 100, 200, 200), 0.25}};
    md.priors = pm;
    return md;
}

}  // namespace

TEST_CASE("validate_mission examples") {
    CHECK(validate_mission(prior_mission()).ok());
    auto md = prior_mission();
    md.priors->cells[0].prob = 0.15;
    CHECK(validate_mission(md).has("PRIOR_NOT_NORMALIZED"));
    md = prior_mission();
    md.kozs.push_back({"koz_0", Polygon::rectangle(10, 10, 20, 20), TimeWindow{50, 10}});
    CHECK(validate_mission(md).has("WINDOW_INVERTED"));
}

TEST_CASE("validation finds every single-invariant mutation") {
    struct Mutation {
        const char* code;
        std::function<void(MissionDescription&, SimulationConfig&)> apply;
    };
    const std::vector<Mutation> mutations = {
        {"PRIOR_NOT_NORMALIZED", [](auto& md, auto&) { md.priors->cells[1].prob = 0.35; }},
        {"PRIOR_OUT_OF_RANGE", [](auto& md, auto&) {
             md.priors->cells[0].prob = -0.25;
             md.priors->cells[1].prob = 0.75;
         }},
        {"PRIOR_CELLS_OVERLAP", [](auto& md, auto&) {
             md.priors->cells[0].polygon = Polygon::rectangle(0, 0, 150, 100);
         }},
        {"PRIOR_OUTSIDE_AOI", [](auto& md, auto&) {
             md.priors->cells[3].polygon = Polygon::rectangle(150, 150, 250, 250);
         }},
        {"WINDOW_INVERTED", [](auto& md, auto&) { md.aois[0].window = TimeWindow{30, 20}; }},
        {"WINDOW_NEGATIVE", [](auto& md, auto&) { md.aois[0].window = TimeWindow{-1, 20}; }},
        {"MISSING_AOI", [](auto& md, auto&) {
             md.aois.clear();
             md.priors.reset();
         }},
        {"MISSING_ROUTE", [](auto& md, auto&) { md.objective = Objective::RouteSearch; }},
        {"ROUTE_DUPLICATE_POINT", [](auto& md, auto&) {
             md.route = RouteOfInterest{{{0, 0}, {0, 0}, {50, 0}}, 20};
         }},
        {"BAND_WIDTH_NONPOSITIVE", [](auto& md, auto&) { md.route = RouteOfInterest{{{0, 0}, {50, 0}}, 0}; }},
        {"ROUTE_TOO_SHORT", [](auto& md, auto&) { md.route = RouteOfInterest{{{0, 0}}, 10}; }},
        {"DURATION_NONPOSITIVE", [](auto& md, auto&) { md.mission_duration = 0; }},
        {"DUPLICATE_ID", [](auto& md, auto&) { md.kozs = {{"k", Polygon::rectangle(0, 0, 1, 1), {}}, {"k", Polygon::rectangle(2, 2, 3, 3), {}}}; }},
        {"RELATION_TARGET_MISMATCH", [](auto& md, auto&) {
             md.relations.push_back({"garage", RelationOperator::parse("RIGHT_OF"), "car_9", {}});
         }},
        {"INVALID_NESTING", [](auto& md, auto&) {
             md.relations.push_back({"garage", RelationOperator{SpatialOp::RightOf, 2}, "car_1", {}});
         }},
        {"TARGET_COUNT", [](auto&, auto& cfg) { cfg.entities[0].is_target = false; }},
        {"TARGET_IS_CONFUSER", [](auto&, auto& cfg) { cfg.entities[0].is_confuser = true; }},
        {"DUPLICATE_ID", [](auto&, auto& cfg) { cfg.entities.push_back(fixture::car("car_1", 10, 10, 0)); }},
        {"BBOX_INVALID", [](auto&, auto& cfg) { cfg.entities[0].bbox.extents.y = 0; }},
        {"TRAJECTORY_START_MISMATCH", [](auto&, auto& cfg) {
             cfg.entities[0].trajectory = fixture::line_path({101, 100, 0}, {150, 100, 0}, 0, 10);
         }},
        {"OBSTACLE_INVALID", [](auto&, auto& cfg) {
             cfg.obstacles.push_back({Polygon::rectangle(0, 0, 5, 5), -1});
         }},
        {"ENV_OUT_OF_RANGE", [](auto&, auto& cfg) { cfg.environment.fog = 1.5; }},
        {"ENV_OUT_OF_RANGE", [](auto&, auto& cfg) { cfg.environment.time_of_day = 24.0; }},
        {"NO_CAMERA", [](auto&, auto& cfg) { cfg.cameras.clear(); }},
        {"CAMERA_INVALID", [](auto&, auto& cfg) { cfg.cameras[0].hfov = 180; }},
        {"KINEMATICS_INVALID", [](auto&, auto& cfg) { cfg.uav_kinematics.z_min = 200; }},
        {"TICK_DT_NONPOSITIVE", [](auto&, auto& cfg) { cfg.tick_dt = 0; }},
        {"TARGET_MISMATCH", [](auto& md, auto&) { md.target.class_name = "truck"; }},
    };
    const auto base_md = prior_mission();
    const auto base_cfg = fixture::open_config();
    REQUIRE(validate_pair(base_md, base_cfg).ok());
    for (const auto& m : mutations) {
        auto md = base_md;
        auto cfg = base_cfg;
        m.apply(md, cfg);
        const auto rep = validate_pair(md, cfg);
        INFO(m.code);
        CHECK(rep.has(m.code));
    }
}

TEST_CASE("serialization round trip and byte stability on generated scenarios") {
    for (auto obj : {Objective::AreaSearch, Objective::RouteSearch, Objective::MovingTargetPursuit}) {
        const auto tpl = suburban_grid_template(obj);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto pair = sample_scenario(tpl, seed);
            const std::string m1 = serialize(pair.mission);
            const std::string c1 = serialize(pair.config);
            CHECK(m1 == serialize(pair.mission));
            const auto md = deserialize_mission(m1);
            const auto cfg = deserialize_config(c1);
            CHECK(md == pair.mission);
            CHECK(cfg == pair.config);
            CHECK(serialize(md) == m1);
            CHECK(serialize(cfg) == c1);
        }
    }
}

TEST_CASE("parse errors carry the offending path") {
    Json doc = mission_to_json(prior_mission());
    doc.erase("objective");
    std::string path;
    CHECK(error_code([&] { mission_from_json(doc); }, &path) == "MISSING_FIELD");
    CHECK(path == "objective");

    doc = mission_to_json(prior_mission());
    doc["surprise"] = 1;
    CHECK(error_code([&] { mission_from_json(doc); }, &path) == "UNKNOWN_FIELD");
    CHECK(path == "surprise");

    auto cfg = fixture::open_config();
    Json cdoc = config_to_json(cfg);
    cdoc["entities"].push_back(cdoc["entities"][0]);
    cdoc["entities"][1]["is_target"] = false;
    CHECK(error_code([&] { config_from_json(cdoc); }, &path) == "DUPLICATE_ID");
    CHECK(path == "entities[1].id");

    CHECK(error_code([&] { deserialize_mission("{not json"); }) == "PARSE_ERROR");
    auto bad = prior_mission();
    bad.mission_duration = -1;
    CHECK(error_code([&] { serialize(bad); }) == "INVALID_DOCUMENT");
}

TEST_CASE("route_band area and membership") {
    const RouteOfInterest seg{{{0, 0}, {100, 0}}, 30};
    const Polygon band = route_band(seg);
    // Monte Carlo membership against the exact distance predicate.
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> ux(-20, 120), uy(-20, 20);
    const int n = 40000;
    int inside = 0;
    for (int i = 0; i < n; ++i) {
        const Point2 p{ux(g), uy(g)};
        if (oracle::contains(band, p)) ++inside;
    }
    const double mc_area = 140.0 * 40.0 * inside / n;
    const double expected = 100 * 30 + oracle::kPi * 15 * 15;
    CHECK(std::fabs(mc_area - expected) / expected < 0.02);
    CHECK(band.area() == doctest::Approx(expected).epsilon(1e-6));

    const RouteOfInterest thin{{{0, 0}, {100, 0}}, 1e-4};
    CHECK(route_band(thin).area() < 0.02);

    const RouteOfInterest ell{{{0, 0}, {60, 0}, {60, 40}}, 10};
    const Polygon lb = route_band(ell);
    for (const auto& v : ell.polyline) CHECK(point_in_polygon(v, lb));

    std::uniform_real_distribution<double> lx(-15, 75), ly(-15, 55);
    for (int i = 0; i < 50000; ++i) {
        const Point2 p{lx(g), ly(g)};
        double d = 1e300;
        for (std::size_t k = 1; k < ell.polyline.size(); ++k) {
            d = std::min(d, oracle::seg_dist(p, ell.polyline[k - 1], ell.polyline[k]));
        }
        if (d <= 5.0 - 1e-6) REQUIRE(point_in_polygon(p, lb));
        if (d >= 5.0 + 1e-6) REQUIRE_FALSE(point_in_polygon(p, lb));
    }
    CHECK(error_code([] { route_band(RouteOfInterest{{{0, 0}}, 10}); }) == "INVALID_ROUTE");
}

TEST_CASE("relation operator names parse and print") {
    for (const char* name : {"NEXT_TO", "NOT_NEXT_TO", "ON_TOP_OF", "NOT_ON_TOP_OF", "ORTHOGONAL_TO", "IN_FRONT_OF",
                             "RIGHT_OF", "LEFT_OF", "PART_OF", "EVENTUALLY_RIGHT_OF"}) {
        CHECK(RelationOperator::parse(name).name() == name);
    }
    CHECK(RelationOperator::parse("EVENTUALLY_EVENTUALLY_NEXT_TO").temporal_depth == 2);
    CHECK_THROWS_AS(RelationOperator::parse("BEHIND"), Error);
}
