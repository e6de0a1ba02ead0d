#include "mforge/score.hpp"

#include "mforge/codec.hpp"
#include "mforge/error.hpp"
#include "mforge/hashing.hpp"

namespace mforge {

Json to_json(const MetricsReport& r) {
    Json j{{"target_detected", r.target_detected},
           {"correct_disambiguation", r.correct_disambiguation},
           {"time_to_first_detection", nullptr},
           {"koz_violation_count", r.koz_violation_count},
           {"koz_violation_duration", r.koz_violation_duration},
           {"pursuit_in_view_fraction", r.pursuit_in_view_fraction},
           {"aoi_dwell_fraction", r.aoi_dwell_fraction},
           {"mission_failed", r.mission_failed},
           {"declared_entity", nullptr},
           {"status", std::string(to_string(r.status))}};
    if (r.time_to_first_detection) j["time_to_first_detection"] = *r.time_to_first_detection;
    if (r.declared_entity) j["declared_entity"] = *r.declared_entity;
    return j;
}

MetricsReport metrics_from_json(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    MetricsReport m;
    m.target_detected = as_bool(r.required("target_detected"), r.path_of("target_detected"));
    m.correct_disambiguation = as_bool(r.required("correct_disambiguation"), r.path_of("correct_disambiguation"));
    if (const Json* t = r.optional("time_to_first_detection")) {
        m.time_to_first_detection = as_double(*t, r.path_of("time_to_first_detection"));
    }
    m.koz_violation_count = as_u64(r.required("koz_violation_count"), r.path_of("koz_violation_count"));
    m.koz_violation_duration = as_double(r.required("koz_violation_duration"), r.path_of("koz_violation_duration"));
    m.pursuit_in_view_fraction = as_double(r.required("pursuit_in_view_fraction"), r.path_of("pursuit_in_view_fraction"));
    m.aoi_dwell_fraction = as_double(r.required("aoi_dwell_fraction"), r.path_of("aoi_dwell_fraction"));
    m.mission_failed = as_bool(r.required("mission_failed"), r.path_of("mission_failed"));
    if (const Json* d = r.optional("declared_entity")) m.declared_entity = as_string(*d, r.path_of("declared_entity"));
    m.status = parse_status(as_string(r.required("status"), r.path_of("status")));
    r.finish();
    return m;
}

MetricsReport score_mission(const MissionLog& log, const MissionDescription& md) {
    if (log.mission_hash != sha256_hex(serialize(md))) {
        throw Error("INCOMPATIBLE_INPUTS", "log was recorded for a different mission");
    }
    MetricsReport m;
    m.status = log.status;
    std::size_t ticks = 0, in_view = 0, in_aoi = 0;
    const std::string& target = md.target.id;
    auto saw_target = [&](double t) {
        if (!m.target_detected || t < *m.time_to_first_detection) m.time_to_first_detection = t;
        m.target_detected = true;
    };
    for (const auto& ev : log.events) {
        if (const auto* t = std::get_if<TickEvent>(&ev)) {
            ++ticks;
            in_view += t->target_in_view ? 1 : 0;
            in_aoi += t->in_aoi ? 1 : 0;
        } else if (const auto* d = std::get_if<DetectionEvent>(&ev)) {
            if (d->detection.true_entity_id == target) saw_target(d->time);
        } else if (const auto* r = std::get_if<ReportEvent>(&ev)) {
            if (r->report.entity_id == target) saw_target(r->time);
        } else if (const auto* v = std::get_if<ViolationEvent>(&ev)) {
            ++m.koz_violation_count;
            m.koz_violation_duration += v->violation.duration();
        } else if (const auto* dec = std::get_if<DeclarationEvent>(&ev)) {
            m.declared_entity = dec->entity_id;
        }
    }
    m.correct_disambiguation = m.declared_entity && *m.declared_entity == target;
    if (ticks > 0) {
        m.pursuit_in_view_fraction = static_cast<double>(in_view) / static_cast<double>(ticks);
        m.aoi_dwell_fraction = static_cast<double>(in_aoi) / static_cast<double>(ticks);
    }
    m.mission_failed = m.koz_violation_count > 0;
    return m;
}

}  // namespace mforge
