#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include <sys/socket.h>
#include <unistd.h>

#include "CLI11.hpp"
#include "mforge/codec.hpp"
#include "mforge/constraints.hpp"
#include "mforge/error.hpp"
#include "mforge/hashing.hpp"
#include "mforge/planning.hpp"
#include "mforge/protocol.hpp"
#include "mforge/randomizer.hpp"
#include "mforge/relations.hpp"
#include "mforge/render.hpp"
#include "mforge/score.hpp"
#include "mforge/sim.hpp"

namespace fs = std::filesystem;
using namespace mforge;

namespace {

constexpr int kExitFindings = 2;
constexpr int kExitRuntime = 3;

/// Input documents that fail to load or validate.
struct FindingsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IO_ERROR", "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& bytes) {
    if (path.empty() || path == "-") {
        std::cout << bytes;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << bytes)) throw Error("IO_ERROR", "cannot write '" + path + "'");
}

template <typename F>
auto load_doc(const std::string& path, F&& parse) {
    const std::string bytes = read_file(path);
    try {
        return parse(bytes);
    } catch (const Error& e) {
        throw FindingsError(path + ": " + e.what());
    }
}

MissionDescription load_mission(const std::string& path) {
    auto md = load_doc(path, [](const std::string& b) { return deserialize_mission(b); });
    const auto rep = validate_mission(md);
    if (!rep.ok()) throw FindingsError(path + ": " + rep.findings.front().code + " at " + rep.findings.front().path);
    return md;
}

SimulationConfig load_config(const std::string& path) {
    auto cfg = load_doc(path, [](const std::string& b) { return deserialize_config(b); });
    const auto rep = validate_config(cfg);
    if (!rep.ok()) throw FindingsError(path + ": " + rep.findings.front().code + " at " + rep.findings.front().path);
    return cfg;
}

/// MISSION_FORGE_SEED replaces document seeds for ad-hoc runs.
std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv("MISSION_FORGE_SEED");
    if (!v || !*v) return std::nullopt;
    char* end = nullptr;
    const unsigned long long s = std::strtoull(v, &end, 0);
    if (!end || *end) throw Error("INVALID_OPTION", std::string("MISSION_FORGE_SEED is not an integer: ") + v);
    std::cerr << "mforge: MISSION_FORGE_SEED=" << s << " overrides the document seed\n";
    return s;
}

Point2 parse_xy(const std::string& s) {
    double x = 0.0, y = 0.0;
    char comma = 0;
    std::istringstream in(s);
    if (!(in >> x >> comma >> y) || comma != ',') throw Error("INVALID_OPTION", "expected X,Y but got '" + s + "'");
    return {x, y};
}

std::string print_findings(const std::string& label, const ValidationReport& rep) {
    std::string out;
    for (const auto& f : rep.findings) out += label + ": " + f.code + " at " + f.path + ": " + f.message + "\n";
    return out;
}

// ---------------------------------------------------------------- verbs

int cmd_template(const std::string& objectives, const std::string& out) {
    std::vector<Objective> objs;
    std::stringstream ss(objectives);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) objs.push_back(parse_objective(item));
    }
    if (objs.empty()) throw Error("INVALID_OPTION", "no objectives given");
    ScenarioTemplate tpl = suburban_grid_template(objs.front());
    tpl.objectives = objs;
    write_output(out, serialize(tpl));
    return 0;
}

int cmd_generate(const std::string& tpl_path, std::size_t n, std::uint64_t seed, const std::string& out,
                 unsigned workers) {
    ScenarioTemplate tpl = tpl_path.empty()
                               ? suburban_grid_template()
                               : load_doc(tpl_path, [](const std::string& b) { return deserialize_template(b); });
    const auto rep = validate_template(tpl);
    if (!rep.ok()) {
        std::cerr << print_findings(tpl_path, rep);
        return kExitFindings;
    }
    const auto manifest = generate_dataset(tpl, n, seed, out, workers);
    std::cout << "generated " << manifest.entries.size() << " scenarios (" << manifest.failures.size()
              << " failures), manifest " << manifest.hash() << "\n";
    return manifest.failures.empty() ? 0 : kExitRuntime;
}

int validate_pair_files(const std::string& mission, const std::string& config, std::string& report) {
    MissionDescription md;
    SimulationConfig cfg;
    try {
        md = load_doc(mission, [](const std::string& b) { return deserialize_mission(b); });
        cfg = load_doc(config, [](const std::string& b) { return deserialize_config(b); });
    } catch (const FindingsError& e) {
        report += std::string(e.what()) + "\n";
        return 1;
    }
    const auto rep = validate_pair(md, cfg);
    report += print_findings(mission + " + " + config, rep);
    return static_cast<int>(rep.findings.size());
}

int cmd_validate(const std::string& mission, const std::string& config, const std::string& dir) {
    std::string report;
    std::size_t bad = 0, total = 0;
    if (!dir.empty()) {
        const fs::path root(dir);
        const auto manifest = DatasetManifest::from_json(parse_json(read_file((root / "manifest.json").string())));
        for (const auto& e : manifest.entries) {
            ++total;
            const auto mp = (root / e.mission_path).string();
            const auto cp = (root / e.config_path).string();
            int n = validate_pair_files(mp, cp, report);
            if (n == 0 && content_hash(read_file(mp), read_file(cp)) != e.content_hash) {
                report += e.id + ": CONTENT_HASH mismatch\n";
                n = 1;
            }
            if (n) ++bad;
        }
    } else {
        if (mission.empty() || config.empty()) throw Error("INVALID_OPTION", "give --mission and --config, or --dir");
        ++total;
        if (validate_pair_files(mission, config, report)) ++bad;
    }
    std::cout << report << (total - bad) << "/" << total << " valid\n";
    return bad ? kExitFindings : 0;
}

int cmd_plan(const std::string& kind, const std::string& mission, const std::string& config, int camera,
             double altitude, const std::string& from, const std::string& to, const std::string& out) {
    const auto md = load_mission(mission);
    const auto cfg = load_config(config);
    const std::uint64_t seed = env_seed().value_or(cfg.seed);
    if (camera < 0 || static_cast<std::size_t>(camera) >= cfg.cameras.size()) {
        throw Error("INVALID_OPTION", "camera index out of range");
    }
    const CameraModel& cam = cfg.cameras[static_cast<std::size_t>(camera)];
    Json result;
    if (kind == "look") {
        const EntitySpec* target = cfg.find_entity(md.target.id);
        if (!target) throw Error("MISSING_ENTITY", "target '" + md.target.id + "' not in config");
        RrtConfig rc;
        rc.seed = seed;
        LookGuaranteeOptions lo;
        lo.tick_dt = cfg.tick_dt;
        const auto plan = plan_look_guarantee_path(cfg.uav_start, *target, cam, cfg.obstacles, md.kozs,
                                                   cfg.uav_kinematics, rc, lo);
        std::cerr << "mforge: guarantee_time " << plan.guarantee_time << " vantage " << canonical_line(to_json(plan.vantage))
                  << "\n";
        write_output(out, serialize(plan.path));
        return 0;
    } else if (kind == "search") {
        const double alt = altitude > 0.0 ? altitude : cfg.uav_start.position.z;
        const auto plan = plan_area_search(md.aois, md.priors ? &*md.priors : nullptr, cam, alt);
        Json legs = Json::array();
        for (const auto& leg : plan.legs) {
            Json w = Json::array();
            for (const auto& p : leg.waypoints) w.push_back(to_json(p));
            legs.push_back(Json{{"region", leg.region}, {"waypoints", w}});
        }
        result = Json{{"track_spacing", plan.track_spacing}, {"legs", legs}};
    } else if (kind == "route") {
        const Point2 a = from.empty() ? cfg.uav_start.position.xy() : parse_xy(from);
        if (to.empty()) throw Error("INVALID_OPTION", "plan route needs --to X,Y");
        RrtConfig rc;
        rc.seed = seed;
        const auto poly = rrt_plan(a, parse_xy(to), cfg.obstacles, md.kozs, rc);
        Json pts = Json::array();
        for (const auto& p : poly) pts.push_back(to_json(p));
        result = Json{{"polyline", pts}};
    } else {
        throw Error("INVALID_OPTION", "plan kind must be look, search or route");
    }
    write_output(out, canonical_document(result));
    return 0;
}

int cmd_check_koz(const std::string& mission, const std::string& path_file) {
    const auto md = load_mission(mission);
    const auto path = load_doc(path_file, [](const std::string& b) { return deserialize_path(b); });
    const auto violations = koz_violations(path, md.kozs);
    Json arr = Json::array();
    for (const auto& v : violations) {
        arr.push_back(Json{{"koz_id", v.koz_id},
                           {"enter_t", v.enter_t},
                           {"exit_t", v.exit_t},
                           {"witness_point", to_json(v.witness_point)}});
    }
    std::cout << canonical_document(Json{{"violations", arr}});
    return violations.empty() ? 0 : kExitFindings;
}

bool relation_holds(const SymbolicRelation& rel, const SceneSnapshot& scene, const SceneTimeline& timeline) {
    for (const auto& e : scene.entities) {
        if (e.id == rel.target_id || !matches_related(rel, e)) continue;
        if (rel.op.eventually() ? eval_eventually(rel, e.id, timeline) : eval_relation(rel, e.id, scene)) return true;
    }
    return false;
}

int cmd_relations(const std::string& mission, const std::string& config, const std::string& rel_file, double time,
                  bool extract) {
    const auto md = load_mission(mission);
    const auto cfg = load_config(config);
    const auto scene = scene_at(cfg, time);
    if (extract) {
        for (const auto& r : extract_relations(md.target.id, scene)) {
            std::cout << r.relation.to_string() << " " << r.related_id << "\n";
        }
        return 0;
    }
    std::vector<SymbolicRelation> relations = md.relations;
    if (!rel_file.empty()) {
        relations = load_doc(rel_file, [](const std::string& b) {
            const Json j = parse_json(b);
            std::vector<SymbolicRelation> out;
            const Json& arr = as_array(j, "$");
            for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(relation_from_json(arr[i], index_path("", i)));
            return out;
        });
    }
    const auto timeline = timeline_of(cfg, md.mission_duration, kRelationTimelineStep);
    for (const auto& rel : relations) {
        std::cout << rel.to_string() << " " << (relation_holds(rel, scene, timeline) ? "true" : "false") << "\n";
    }
    return 0;
}

std::unique_ptr<Policy> make_policy(const std::string& name, const MissionDescription& md,
                                    const SimulationConfig& cfg, const std::string& path_file, std::uint64_t seed,
                                    const RunOptions& ro) {
    if (name == "noop") return std::make_unique<NoOpPolicy>();
    if (name == "scripted") {
        if (!path_file.empty()) {
            return std::make_unique<ScriptedPathPolicy>(
                load_doc(path_file, [](const std::string& b) { return deserialize_path(b); }));
        }
        const EntitySpec* target = cfg.find_entity(md.target.id);
        if (!target) throw Error("MISSING_ENTITY", "target '" + md.target.id + "' not in config");
        RrtConfig rc;
        rc.seed = seed;
        LookGuaranteeOptions lo;
        lo.tick_dt = cfg.tick_dt;
        // Detections only happen within the weather-reduced range.
        CameraModel cam = cfg.cameras.front();
        if (ro.thread == MissionThread::Perception) cam.max_range = effective_range(cam, cfg.environment, ro.profile);
        auto plan = plan_look_guarantee_path(cfg.uav_start, *target, cam, cfg.obstacles, md.kozs,
                                             cfg.uav_kinematics, rc, lo);
        return std::make_unique<ScriptedPathPolicy>(std::move(plan.path));
    }
    if (name == "search") {
        const auto plan = plan_area_search(md.aois, md.priors ? &*md.priors : nullptr, cfg.cameras.front(),
                                           cfg.uav_start.position.z);
        return std::make_unique<WaypointPolicy>(plan.waypoints());
    }
    throw Error("INVALID_OPTION", "unknown policy '" + name + "'");
}

int serve_fd_session(const MissionDescription& md, const SimulationConfig& cfg, int in_fd, int out_fd, bool owns,
                     const ServeOptions& opts, const std::string& log_out) {
    FdChannel ch(in_fd, out_fd, owns);
    const auto res = serve_session(md, cfg, ch, opts);
    if (!log_out.empty()) write_output(log_out, res.log.to_jsonl());
    std::cerr << "mforge: session " << to_string(res.log.status) << " log " << res.log.hash() << "\n";
    return res.log.status == RunStatus::ClientError ? kExitRuntime : 0;
}

int cmd_run(const std::string& mission, const std::string& config, const std::string& thread,
            const std::string& policy_name, const std::string& path_file, const std::string& endpoint,
            bool lockstep, bool pp_los, const std::string& out) {
    const auto md = load_mission(mission);
    const auto cfg = load_config(config);
    RunOptions ro;
    ro.thread = parse_thread(thread);
    ro.seed_override = env_seed();
    ro.perfect_perception_los = pp_los;
    const std::uint64_t seed = ro.seed_override.value_or(cfg.seed);
    if (policy_name == "client") {
        const auto ep = Endpoint::parse(endpoint.empty() ? "stdio" : endpoint);
        ServeOptions so{ro, lockstep};
        if (ep.kind == Endpoint::Kind::Stdio) return serve_fd_session(md, cfg, 0, 1, false, so, out);
        const int lfd = listen_on(ep);
        const int cfd = ::accept(lfd, nullptr, nullptr);
        ::close(lfd);
        if (cfd < 0) throw Error("IO_ERROR", "accept failed");
        return serve_fd_session(md, cfg, cfd, cfd, true, so, out);
    }
    auto policy = make_policy(policy_name, md, cfg, path_file, seed, ro);
    const auto log = run_mission(md, cfg, *policy, ro);
    write_output(out, log.to_jsonl());
    std::cerr << "mforge: " << to_string(log.status) << " log " << log.hash() << "\n";
    return 0;
}

int cmd_serve(const std::string& mission, const std::string& config, const std::string& thread,
              const std::string& endpoint, bool lockstep, bool pp_los, std::size_t sessions,
              const std::string& log_dir) {
    const auto md = load_mission(mission);
    const auto cfg = load_config(config);
    RunOptions ro;
    ro.thread = parse_thread(thread);
    ro.seed_override = env_seed();
    ro.perfect_perception_los = pp_los;
    const ServeOptions so{ro, lockstep};
    const auto ep = Endpoint::parse(endpoint);
    if (ep.kind == Endpoint::Kind::Stdio) return serve_fd_session(md, cfg, 0, 1, false, so, "");
    const int lfd = listen_on(ep);
    std::cerr << "mforge: listening on " << endpoint << "\n";
    std::vector<std::thread> workers;
    for (std::size_t k = 0; sessions == 0 || k < sessions; ++k) {
        const int cfd = ::accept(lfd, nullptr, nullptr);
        if (cfd < 0) continue;
        const std::string log_out = log_dir.empty() ? "" : (fs::path(log_dir) / ("session_" + std::to_string(k) + ".jsonl")).string();
        workers.emplace_back([&, cfd, log_out] {
            try {
                serve_fd_session(md, cfg, cfd, cfd, true, so, log_out);
            } catch (const std::exception& e) {
                std::cerr << "mforge: session failed: " << e.what() << "\n";
            }
        });
    }
    for (auto& w : workers) w.join();
    ::close(lfd);
    return 0;
}

int cmd_score(const std::string& mission, const std::string& log_file) {
    const auto md = load_mission(mission);
    const auto log = load_doc(log_file, [](const std::string& b) { return MissionLog::from_jsonl(b); });
    std::cout << canonical_document(to_json(score_mission(log, md)));
    return 0;
}

int cmd_render(const std::string& mission, const std::string& config, const std::string& log_file,
               const std::string& out) {
    const auto md = load_mission(mission);
    const auto cfg = load_config(config);
    std::optional<MissionLog> log;
    if (!log_file.empty()) log = load_doc(log_file, [](const std::string& b) { return MissionLog::from_jsonl(b); });
    write_output(out, render_scene(md, cfg, log));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mforge: UAV search-mission scenario generator, planner and simulator"};
    app.require_subcommand(1);

    std::string mission, config, out, tpl, dir, thread = "perception", policy = "scripted", path_file, endpoint,
                                              log_file, objectives = "area_search", kind, from, to, log_dir;
    std::size_t n = 0, sessions = 0;
    std::uint64_t seed = 0;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    int camera = 0;
    double altitude = 0.0, time = 0.0;
    bool lockstep = false, extract = false;
    std::string rel_file, pp_los = "on";

    auto* t = app.add_subcommand("template", "Write the built-in suburban grid template");
    t->add_option("--objectives", objectives, "Comma-separated objective kinds");
    t->add_option("-o,--out", out, "Output file (default stdout)");

    auto* g = app.add_subcommand("generate", "Generate a scenario dataset");
    g->add_option("-t,--template", tpl, "Template file (default: built-in suburban grid)");
    g->add_option("-n,--count", n, "Number of scenarios")->required();
    g->add_option("-s,--seed", seed, "Base seed")->required();
    g->add_option("-o,--out", out, "Output directory")->required();
    g->add_option("-j,--workers", workers, "Worker threads");

    auto* v = app.add_subcommand("validate", "Validate a mission/config pair or a dataset directory");
    v->add_option("-m,--mission", mission);
    v->add_option("-c,--config", config);
    v->add_option("-d,--dir", dir, "Dataset directory with manifest.json");

    auto* p = app.add_subcommand("plan", "Plan a look-guarantee path, an area search or an RRT route");
    p->add_option("kind", kind, "look | search | route")->required();
    p->add_option("-m,--mission", mission)->required();
    p->add_option("-c,--config", config)->required();
    p->add_option("--camera", camera, "Camera index");
    p->add_option("--altitude", altitude, "Search altitude (default: UAV start altitude)");
    p->add_option("--from", from, "Route start X,Y (default: UAV start)");
    p->add_option("--to", to, "Route goal X,Y");
    p->add_option("-o,--out", out);

    auto* ck = app.add_subcommand("check", "Constraint checks");
    auto* koz = ck->add_subcommand("koz", "KOZ violations of a timed path");
    koz->add_option("-m,--mission", mission)->required();
    koz->add_option("--path", path_file, "Timed path document")->required();
    ck->require_subcommand(1);

    auto* rel = app.add_subcommand("relations", "Symbolic relations");
    auto* rev = rel->add_subcommand("eval", "Extract target relations and rank candidates");
    rev->add_option("-m,--mission", mission)->required();
    rev->add_option("-c,--config", config)->required();
    rev->add_option("-r,--relations", rel_file, "JSON array of relations (default: the mission's relations)");
    rev->add_option("--time", time, "Snapshot time");
    rev->add_flag("--extract", extract, "List every true relation of the target instead");
    rel->require_subcommand(1);

    auto* r = app.add_subcommand("run", "Run a mission and write its log");
    r->add_option("-m,--mission", mission)->required();
    r->add_option("-c,--config", config)->required();
    r->add_option("--thread", thread, "perception | maneuver");
    r->add_option("--policy", policy, "scripted | search | noop | client");
    r->add_option("--path", path_file, "Timed path for the scripted policy");
    r->add_option("--endpoint", endpoint, "Client endpoint for --policy client");
    r->add_flag("--lockstep", lockstep, "Wait for one command per tick");
    r->add_option("--perfect-perception-los", pp_los, "Require line of sight for perfect reports")
        ->check(CLI::IsMember({"on", "off"}));
    r->add_option("-o,--out", out, "Log file (default stdout)");

    auto* s = app.add_subcommand("serve", "Serve missions to external clients");
    s->add_option("-m,--mission", mission)->required();
    s->add_option("-c,--config", config)->required();
    s->add_option("--endpoint", endpoint, "stdio | tcp:HOST:PORT | unix:PATH")->required();
    s->add_option("--thread", thread, "perception | maneuver");
    s->add_flag("--lockstep", lockstep, "Wait for one command per tick");
    s->add_option("--perfect-perception-los", pp_los, "Require line of sight for perfect reports")
        ->check(CLI::IsMember({"on", "off"}));
    s->add_option("--sessions", sessions, "Stop after this many sessions (0: forever)");
    s->add_option("--log-dir", log_dir, "Write one log per session here");

    auto* sc = app.add_subcommand("score", "Score a mission log");
    sc->add_option("-m,--mission", mission)->required();
    sc->add_option("-l,--log", log_file)->required();

    auto* rd = app.add_subcommand("render", "Render a scenario (and optional log) as SVG");
    rd->add_option("-m,--mission", mission)->required();
    rd->add_option("-c,--config", config)->required();
    rd->add_option("-l,--log", log_file);
    rd->add_option("-o,--out", out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (t->parsed()) return cmd_template(objectives, out);
        if (g->parsed()) return cmd_generate(tpl, n, seed, out, workers);
        if (v->parsed()) return cmd_validate(mission, config, dir);
        if (p->parsed()) return cmd_plan(kind, mission, config, camera, altitude, from, to, out);
        if (koz->parsed()) return cmd_check_koz(mission, path_file);
        if (rev->parsed()) return cmd_relations(mission, config, rel_file, time, extract);
        if (r->parsed()) return cmd_run(mission, config, thread, policy, path_file, endpoint, lockstep, pp_los == "on", out);
        if (s->parsed()) return cmd_serve(mission, config, thread, endpoint, lockstep, pp_los == "on", sessions, log_dir);
        if (sc->parsed()) return cmd_score(mission, log_file);
        if (rd->parsed()) return cmd_render(mission, config, log_file, out);
    } catch (const FindingsError& e) {
        std::cerr << "mforge: " << e.what() << "\n";
        return kExitFindings;
    } catch (const std::exception& e) {
        std::cerr << "mforge: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}
