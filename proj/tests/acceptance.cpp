// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "fixtures.hpp"
#include "mforge/codec.hpp"
#include "mforge/constraints.hpp"
#include "mforge/error.hpp"
#include "mforge/planning.hpp"
#include "mforge/protocol.hpp"
#include "mforge/randomizer.hpp"
#include "mforge/relations.hpp"
#include "mforge/score.hpp"
#include "mforge/sim.hpp"
#include "oracles.hpp"

using namespace mforge;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kDatasetSize = 9000;
constexpr unsigned kWorkers = 8;
constexpr double kDatasetBudgetSec = 15 * 60;
constexpr double kIntervalTol = 0.1;
constexpr double kCollisionStep = 0.01;
constexpr double kAngleTol = 15.0;

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ScenarioTemplate mixed_template() {
    auto tpl = suburban_grid_template();
    tpl.objectives = {Objective::AreaSearch, Objective::RouteSearch, Objective::MovingTargetPursuit};
    return tpl;
}

/// 3D march along a timed path: no sample may sit inside an obstacle at or below its height.
bool path_collision_free(const TimedPath& path, const std::vector<ExtrudedObstacle>& obs) {
    const auto& s = path.samples();
    for (std::size_t i = 1; i < s.size(); ++i) {
        const Point3 a = s[i - 1].pose.position, b = s[i].pose.position;
        const double len = std::hypot(b.x - a.x, b.y - a.y, b.z - a.z);
        const auto n = static_cast<long>(std::ceil(len / kCollisionStep));
        for (long k = 0; k <= n; ++k) {
            const double u = n ? static_cast<double>(k) / static_cast<double>(n) : 0.0;
            const Point3 q{a.x + u * (b.x - a.x), a.y + u * (b.y - a.y), a.z + u * (b.z - a.z)};
            for (const auto& o : obs) {
                if (q.z <= o.height && oracle::contains(o.footprint, {q.x, q.y}, 0.0)) return false;
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------

Outcome dataset_scale() {
    Outcome out;
    const auto tpl = mixed_template();
    const fs::path root = fs::temp_directory_path() / ("mforge_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::uint64_t base_seed = 9000;

    auto t0 = Clock::now();
    const auto m1 = generate_dataset(tpl, kDatasetSize, base_seed, root / "a", kWorkers);
    const double t_first = seconds_since(t0);
    t0 = Clock::now();
    const auto m2 = generate_dataset(tpl, kDatasetSize, base_seed, root / "b", kWorkers);
    const double t_second = seconds_since(t0);

    std::size_t valid = 0, hash_ok = 0;
    std::set<std::string> hashes;
    for (const auto& e : m1.entries) {
        hashes.insert(e.content_hash);
        const std::string mb = slurp(root / "a" / e.mission_path);
        const std::string cb = slurp(root / "a" / e.config_path);
        if (content_hash(mb, cb) == e.content_hash) ++hash_ok;
        try {
            if (validate_pair(deserialize_mission(mb), deserialize_config(cb)).ok()) ++valid;
        } catch (const Error&) {
        }
    }
    const auto reread = DatasetManifest::from_json(parse_json(slurp(root / "a" / "manifest.json")));
    out.pass = m1.entries.size() == kDatasetSize && valid == kDatasetSize && hash_ok == kDatasetSize &&
               hashes.size() == kDatasetSize && m1.hash() == m2.hash() && reread.hash() == m1.hash() &&
               t_first < kDatasetBudgetSec && t_second < kDatasetBudgetSec;
    out.detail = fmt("%zu entries, %zu valid, %zu unique hashes, rerun manifest %s, %.1f s and %.1f s with %u workers, %zu resampled",
                     m1.entries.size(), valid, hashes.size(), m1.hash() == m2.hash() ? "identical" : "DIFFERENT",
                     t_first, t_second, kWorkers, m1.failures.size());
    fs::remove_all(root);
    return out;
}

Outcome koz_oracle() {
    std::mt19937_64 g(1000);
    int disagreements = 0;
    std::size_t intervals = 0;
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto inst = fixture::random_koz_instance(g);
        auto got = koz_violations(inst.path, inst.kozs);
        const auto ref = oracle::koz_sampled(inst.path.samples(), inst.kozs);
        std::sort(got.begin(), got.end(), [](const Violation& a, const Violation& b) { return a.enter_t < b.enter_t; });
        bool ok = got.size() == ref.size();
        for (std::size_t k = 0; ok && k < ref.size(); ++k) {
            const double d = std::max(std::fabs(got[k].enter_t - ref[k].enter), std::fabs(got[k].exit_t - ref[k].exit));
            worst = std::max(worst, d);
            ok = got[k].koz_id == ref[k].id && d <= kIntervalTol;
        }
        intervals += ref.size();
        if (!ok) ++disagreements;
    }
    return {disagreements == 0, fmt("1000 instances, %zu oracle intervals, %d disagreements, max endpoint error %.4f s",
                                    intervals, disagreements, worst)};
}

Outcome relation_suite() {
    std::mt19937_64 g(500);
    std::uniform_int_distribution<int> count(1, 6);
    const RelationParams params;
    std::vector<SceneSnapshot> scenes;
    for (int i = 0; i < 500; ++i) scenes.push_back(fixture::random_scene(g, count(g)));

    std::size_t extract_mismatch = 0, extracted = 0;
    std::size_t duality_pairs = 0, duality_fail = 0;
    for (const auto& s : scenes) {
        for (const auto& t : s.entities) {
            const auto got = extract_relations(t.id, s, params);
            std::vector<ExtractedRelation> brute;
            for (const auto& e : s.entities) {
                if (e.id == t.id) continue;
                for (SpatialOp op : kAllSpatialOps) {
                    const SymbolicRelation r{e.class_name, RelationOperator{op, 0}, t.id, e.attributes};
                    if (eval_relation(r, e.id, s, params)) brute.push_back({e.id, r});
                }
                ++duality_pairs;
                const bool nt = eval_spatial(SpatialOp::NextTo, t, e, s.obstacles, params);
                const bool nnt = eval_spatial(SpatialOp::NotNextTo, t, e, s.obstacles, params);
                const bool ot = eval_spatial(SpatialOp::OnTopOf, t, e, s.obstacles, params);
                const bool not_ = eval_spatial(SpatialOp::NotOnTopOf, t, e, s.obstacles, params);
                if (nt == nnt || ot == not_) ++duality_fail;
            }
            std::sort(brute.begin(), brute.end(), [](const ExtractedRelation& a, const ExtractedRelation& b) {
                return std::tie(a.related_id, a.relation.op) < std::tie(b.related_id, b.relation.op);
            });
            extracted += got.size();
            if (got != brute) ++extract_mismatch;
        }
    }

    std::uniform_real_distribution<double> ang(0, 360), sh(-1000, 1000);
    std::size_t flips = 0, evaluations = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto& s = scenes[static_cast<std::size_t>(i) % scenes.size()];
        const auto m = fixture::moved(s, ang(g), {sh(g), sh(g)});
        for (std::size_t a = 0; a < s.entities.size(); ++a) {
            for (std::size_t b = 0; b < s.entities.size(); ++b) {
                if (a == b) continue;
                for (SpatialOp op : kAllSpatialOps) {
                    ++evaluations;
                    if (eval_spatial(op, s.entities[a], s.entities[b], s.obstacles, params) !=
                        eval_spatial(op, m.entities[a], m.entities[b], m.obstacles, params)) {
                        ++flips;
                    }
                }
            }
        }
    }
    return {extract_mismatch == 0 && flips == 0 && duality_fail == 0,
            fmt("500 scenes, %zu extracted relations, %zu extract mismatches; 10000 transforms, %zu evaluations, %zu flips; "
                "%zu ordered pairs, %zu duality failures",
                extracted, extract_mismatch, evaluations, flips, duality_pairs, duality_fail)};
}

Outcome directional_anchors() {
    struct Anchor {
        SpatialOp op;
        std::vector<double> headings;
    };
    const std::vector<Anchor> anchors{{SpatialOp::RightOf, {270}},
                                      {SpatialOp::LeftOf, {90}},
                                      {SpatialOp::OrthogonalTo, {90, 270}},
                                      {SpatialOp::InFrontOf, {180}}};
    const RelationParams params;
    std::size_t checks = 0, wrong = 0;
    for (double yaw : {0.0, 33.0, 90.0, 211.5, 359.0}) {
        const auto target = fixture::car("car_t", 12.5, -4.0, yaw);
        SceneEntity t{target.id, target.class_name, target.attributes, target.initial_pose, target.bbox};
        for (int deg = 0; deg < 360; ++deg) {
            const double world = (yaw + deg) * oracle::kPi / 180;
            const Point2 c{12.5 + 6 * std::cos(world), -4.0 + 6 * std::sin(world)};
            SceneEntity r{"garage", "garage", {}, Pose({c.x, c.y, 0}, 0), BoundingBox3{{c.x, c.y, 1.5}, {1.5, 1.5, 1.5}, 0}};
            for (const auto& a : anchors) {
                bool expected = false;
                for (double h : a.headings) expected = expected || oracle::ang_diff(deg, h) <= kAngleTol;
                ++checks;
                if (eval_spatial(a.op, t, r, {}, params) != expected) ++wrong;
            }
        }
    }
    return {wrong == 0, fmt("%zu sweep evaluations at 1 deg over 5 headings, %zu mismatches", checks, wrong)};
}

Outcome look_guarantee() {
    auto tpl = suburban_grid_template(Objective::AreaSearch);
    std::size_t plans = 0, no_vantage = 0, late = 0, unsafe = 0;
    double worst_margin = -1e300;
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto p = sample_scenario(tpl, item_seed(5005, i, 0));
        const auto* target = p.config.find_entity(p.mission.target.id);
        RrtConfig rc;
        rc.seed = p.config.seed;
        std::optional<LookGuaranteePlan> found;
        try {
            found = plan_look_guarantee_path(p.config.uav_start, *target, p.config.cameras[0], p.config.obstacles,
                                            p.mission.kozs, p.config.uav_kinematics, rc,
                                            LookGuaranteeOptions{.tick_dt = p.config.tick_dt});
        } catch (const Error&) {
            ++no_vantage;
            continue;
        }
        const LookGuaranteePlan& plan = *found;
        ++plans;
        if (!path_collision_free(plan.path, p.config.obstacles) ||
            !oracle::koz_sampled(plan.path.samples(), p.mission.kozs).empty()) {
            ++unsafe;
        }
        auto md = p.mission;
        md.mission_duration = std::max(md.mission_duration, plan.guarantee_time + 1.0);
        ScriptedPathPolicy policy(plan.path);
        RunOptions ro;
        ro.thread = MissionThread::Maneuver;
        const auto log = run_mission(md, p.config, policy, ro);
        std::optional<double> first;
        for (const auto& ev : log.events) {
            if (const auto* r = std::get_if<ReportEvent>(&ev)) {
                first = r->time;
                break;
            }
        }
        if (!first || *first > plan.guarantee_time + 1e-9) {
            ++late;
        } else {
            worst_margin = std::max(worst_margin, *first - plan.guarantee_time);
        }
    }
    // Entity routes produced by the route planner in generated pursuit scenarios.
    std::size_t routes = 0, unsafe_routes = 0;
    const auto pursuit = suburban_grid_template(Objective::MovingTargetPursuit);
    for (std::uint64_t i = 0; i < 20; ++i) {
        const auto p = sample_scenario(pursuit, item_seed(6006, i, 0));
        for (const auto& e : p.config.entities) {
            if (!e.trajectory) continue;
            ++routes;
            if (!path_collision_free(*e.trajectory, p.config.obstacles)) ++unsafe_routes;
        }
    }
    return {plans > 0 && late == 0 && unsafe == 0 && unsafe_routes == 0,
            fmt("%zu/100 plans (%zu NO_VANTAGE), %zu reports late or missing, %zu unsafe UAV paths, "
                "%zu entity routes with %zu collisions",
                plans, no_vantage, late, unsafe, routes, unsafe_routes)};
}

Outcome disambiguation() {
    const auto tpl = mixed_template();
    std::size_t used = 0, first = 0;
    for (std::uint64_t i = 0; used < 200 && i < 5000; ++i) {
        const auto p = sample_scenario(tpl, item_seed(2002, i, 0));
        std::vector<Candidate> cands;
        std::size_t confusers = 0;
        for (const auto& e : p.config.entities) {
            if (e.is_target || e.is_confuser) cands.push_back({e.id, e.attributes});
            confusers += e.is_confuser ? 1 : 0;
        }
        if (confusers < 2) continue;
        ++used;
        const auto tl = timeline_of(p.config, p.mission.mission_duration, kRelationTimelineStep);
        const auto d = disambiguate(cands, p.mission.relations, tl, tpl.relation_params);
        if (d.ranking[0].entity_id == p.mission.target.id && d.ranking[0].score > d.ranking[1].score) ++first;
    }
    return {used == 200 && first == used, fmt("%zu scenarios with >= 2 confusers, target strictly first in %zu", used, first)};
}

Outcome determinism() {
    const auto tpl = mixed_template();
    std::size_t runs = 0, stable = 0, sessions = 0, matching = 0;
    for (std::uint64_t i = 0; i < 6; ++i) {
        const auto p = sample_scenario(tpl, item_seed(7007, i, 0));
        for (auto thread : {MissionThread::Perception, MissionThread::Maneuver}) {
            RunOptions ro;
            ro.thread = thread;
            auto plan_of = [&] {
                std::vector<Point3> wps;
                for (const auto& a : p.mission.aois) {
                    for (const auto& v : a.polygon.vertices()) wps.push_back({v.x, v.y, 50});
                }
                if (p.mission.route) {
                    for (const auto& v : p.mission.route->polyline) wps.push_back({v.x, v.y, 50});
                }
                return wps;
            };
            WaypointPolicy a(plan_of()), b(plan_of());
            ++runs;
            if (run_mission(p.mission, p.config, a, ro).hash() == run_mission(p.mission, p.config, b, ro).hash()) ++stable;

            auto [server, client] = channel_pair();
            SessionResult res;
            ServeOptions so;
            so.run = ro;
            std::thread th([&, srv = server.get()] { res = serve_session(p.mission, p.config, *srv, so); });
            std::optional<Json> end;
            while (auto line = client->read_line(true)) {
                Json m = parse_json(*line);
                if (m["kind"] == "end") {
                    end = m;
                    break;
                }
            }
            th.join();
            NoOpPolicy noop;
            const auto offline = run_mission(p.mission, p.config, noop, ro);
            ++sessions;
            if (end && metrics_from_json((*end)["report"]) == score_mission(offline, p.mission) &&
                (*end)["log_hash"] == offline.hash()) {
                ++matching;
            }
        }
    }
    return {stable == runs && matching == sessions,
            fmt("%zu/%zu repeated runs with identical log hash; %zu/%zu no-op sessions ended with the offline report",
                stable, runs, matching, sessions)};
}

Outcome street_denial() {
    const auto tpl = suburban_grid_template(Objective::MovingTargetPursuit);
    std::size_t cases = 0, good = 0;
    double worst = 0;
    for (std::uint64_t i = 0; cases < 100 && i < 1000; ++i) {
        const auto p = sample_scenario(tpl, item_seed(8008, i, 0));
        for (const auto& e : p.config.entities) {
            if (!e.trajectory || cases >= 100) continue;
            const auto& traj = *e.trajectory;
            for (const auto& street : tpl.streets) {
                // Dense occupancy oracle at 1 ms.
                std::vector<std::pair<double, double>> occ;
                bool in = false;
                const auto n = static_cast<long>(std::llround((traj.end_time() - traj.start_time()) / 1e-3));
                for (long k = 0; k <= n; ++k) {
                    const double t = k == n ? traj.end_time() : traj.start_time() + k * 1e-3;
                    const bool inside = oracle::contains(street, oracle::path_xy(traj.samples(), t));
                    if (inside && !in) occ.push_back({t, t});
                    if (inside) occ.back().second = t;
                    in = inside;
                }
                if (occ.empty()) continue;
                ++cases;
                const auto koz = street_denial_koz(street, traj);
                const std::vector<KeepOutZone> kozs{koz};
                const auto v = koz_violations(traj, kozs);
                bool ok = std::fabs(koz.window->net - occ.front().first) <= kIntervalTol &&
                          std::fabs(koz.window->nlt - occ.back().second) <= kIntervalTol;
                for (const auto& [a, b] : occ) {
                    bool covered = false;
                    for (const auto& x : v) {
                        if (x.enter_t <= a + kIntervalTol && x.exit_t >= b - kIntervalTol) {
                            covered = true;
                            worst = std::max({worst, std::fabs(x.enter_t - a), std::fabs(x.exit_t - b)});
                        }
                    }
                    ok = ok && covered;
                }
                if (ok) ++good;
                break;
            }
        }
    }
    return {cases == 100 && good == cases,
            fmt("%zu trajectory/street pairs, %zu round trips covered, max endpoint error %.4f s", cases, good, worst)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"dataset scale", dataset_scale},
        {"KOZ oracle equivalence", koz_oracle},
        {"relation suite", relation_suite},
        {"directional anchors", directional_anchors},
        {"planner safety and look guarantee", look_guarantee},
        {"disambiguation", disambiguation},
        {"end-to-end determinism", determinism},
        {"street-denial round trip", street_denial},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(number)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", number, criteria[i].first,
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
