#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixtures.hpp"
#include "mforge/constraints.hpp"
#include "mforge/error.hpp"
#include "oracles.hpp"

using namespace mforge;

namespace {

// Endpoint tolerance between the analytic intervals and the 1 ms sampling oracle.
constexpr double kIntervalTol = 0.1;

KeepOutZone square_koz(std::optional<TimeWindow> w = std::nullopt) {
    return {"koz_sq", Polygon::rectangle(0, 0, 10, 10), w};
}

AreaPriorMap quadrants(double a, double b, double c, double d) {
    AreaPriorMap pm;
    pm.cells = {{Polygon::rectangle(0, 0, 100, 100), a},
                {Polygon::rectangle(100, 0, 200, 100), b},
                {Polygon::rectangle(0, 100, 100, 200), c},
                {Polygon::rectangle(100, 100, 200, 200), d}};
    return pm;
}

}  // namespace

TEST_CASE("koz_violations examples") {
    const auto path = fixture::line_path({-5, 5, 40}, {15, 5, 40}, 0, 10);
    const std::vector<KeepOutZone> kozs{square_koz()};
    const auto v = koz_violations(path, kozs);
    REQUIRE(v.size() == 1);
    const auto ref = oracle::koz_sampled(path.samples(), kozs);
    REQUIRE(ref.size() == 1);
    CHECK(v[0].koz_id == "koz_sq");
    CHECK(std::fabs(v[0].enter_t - ref[0].enter) < kIntervalTol);
    CHECK(std::fabs(v[0].enter_t - 2.5) < 1e-9);
    CHECK(std::fabs(v[0].exit_t - 7.5) < 1e-9);
    CHECK(std::fabs(v[0].exit_t - ref[0].exit) < kIntervalTol);
    CHECK(point_in_polygon(v[0].witness_point, kozs[0].polygon));

    CHECK(koz_violations(fixture::line_path({-5, 50, 40}, {15, 50, 40}, 0, 10), kozs).empty());
    const std::vector<KeepOutZone> later{square_koz(TimeWindow{100, 200})};
    CHECK(koz_violations(path, later).empty());

    const std::vector<KeepOutZone> partial{square_koz(TimeWindow{4, 6})};
    const auto w = koz_violations(path, partial);
    REQUIRE(w.size() == 1);
    CHECK(std::fabs(w[0].enter_t - 4) < 1e-9);
    CHECK(std::fabs(w[0].exit_t - 6) < 1e-9);
}

TEST_CASE("koz_violations match the 1 ms sampling oracle") {
    std::mt19937_64 g(31337);
    for (int trial = 0; trial < 150; ++trial) {
        const auto inst = fixture::random_koz_instance(g);
        const auto got = koz_violations(inst.path, inst.kozs);
        const auto ref = oracle::koz_sampled(inst.path.samples(), inst.kozs);
        INFO("trial " << trial);
        REQUIRE(got.size() == ref.size());
        std::vector<Violation> sorted = got;
        std::sort(sorted.begin(), sorted.end(), [](const Violation& a, const Violation& b) { return a.enter_t < b.enter_t; });
        for (std::size_t i = 0; i < ref.size(); ++i) {
            REQUIRE(sorted[i].koz_id == ref[i].id);
            REQUIRE(std::fabs(sorted[i].enter_t - ref[i].enter) < kIntervalTol);
            REQUIRE(std::fabs(sorted[i].exit_t - ref[i].exit) < kIntervalTol);
        }
    }
}

TEST_CASE("altitude never exempts a KOZ") {
    const std::vector<KeepOutZone> kozs{square_koz()};
    CHECK(koz_violations(fixture::line_path({-5, 5, 500}, {15, 5, 500}, 0, 10), kozs).size() == 1);
}

TEST_CASE("aoi_active windows") {
    AreaOfInterest aoi{"a", Polygon::rectangle(0, 0, 1, 1), std::nullopt};
    CHECK(aoi_active(aoi, 1e6));
    aoi.window = TimeWindow{10, 20};
    CHECK_FALSE(aoi_active(aoi, 5));
    CHECK(aoi_active(aoi, 10));
    CHECK(aoi_active(aoi, 20));
    CHECK_FALSE(aoi_active(aoi, 20.001));
}

TEST_CASE("street_denial_koz windows") {
    const Polygon street = Polygon::rectangle(30, -10, 45, 10);
    const auto traj = fixture::line_path({0, 0, 0}, {100, 0, 0}, 0, 100);
    const auto koz = street_denial_koz(street, traj);
    REQUIRE(koz.window);

    // Dense entry/exit oracle.
    double enter = -1, exit = -1;
    for (int i = 0; i <= 100000; ++i) {
        const double t = i * 1e-3;
        if (oracle::contains(street, oracle::path_xy(traj.samples(), t))) {
            if (enter < 0) enter = t;
            exit = t;
        }
    }
    CHECK(std::fabs(koz.window->net - enter) < 1e-2);
    CHECK(std::fabs(koz.window->nlt - exit) < 1e-2);
    CHECK(std::fabs(koz.window->net - 30) < 1e-9);
    CHECK(std::fabs(koz.window->nlt - 45) < 1e-9);
    CHECK(koz.polygon == street);

    const auto padded = street_denial_koz(street, traj, 5);
    CHECK(std::fabs(padded.window->net - 25) < 1e-9);
    CHECK(std::fabs(padded.window->nlt - 50) < 1e-9);

    const auto early = street_denial_koz(street, traj, 40);
    CHECK(early.window->net == 0.0);

    const auto away = fixture::line_path({0, 50, 0}, {100, 50, 0}, 0, 100);
    try {
        street_denial_koz(street, away);
        FAIL("expected NO_INTERSECTION");
    } catch (const Error& e) {
        CHECK(std::string(e.code()) == "NO_INTERSECTION");
    }
}

TEST_CASE("prior_lookup") {
    const auto uniform = quadrants(0.25, 0.25, 0.25, 0.25);
    CHECK(prior_lookup(uniform, {150, 50}) == 0.25);
    CHECK(prior_cell_index(uniform, {150, 50}) == 1);
    CHECK(prior_lookup(uniform, {500, 500}) == 0.0);
    CHECK(prior_cell_index(uniform, {500, 500}) == -1);

    const auto peaked = quadrants(0.1, 0.2, 0.6, 0.1);
    const Point2 target{40, 160};
    double best = 0;
    for (const auto& c : peaked.cells) best = std::max(best, c.prob);
    CHECK(prior_lookup(peaked, target) == best);
}

TEST_CASE("occupancy intervals merge across samples") {
    const TimedPath path({{0, Pose({-5, 5, 0}, 0)}, {5, Pose({5, 5, 0}, 0)}, {10, Pose({15, 5, 0}, 0)}});
    const auto iv = occupancy_intervals(path, Polygon::rectangle(0, 0, 10, 10));
    REQUIRE(iv.size() == 1);
    CHECK(std::fabs(iv[0].first - 2.5) < 1e-9);
    CHECK(std::fabs(iv[0].second - 7.5) < 1e-9);
}
