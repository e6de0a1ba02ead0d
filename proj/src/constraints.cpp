#include "mforge/constraints.hpp"

#include <algorithm>

#include "mforge/error.hpp"

namespace mforge {

std::vector<std::pair<double, double>> occupancy_intervals(const TimedPath& path, const Polygon& poly) {
    std::vector<std::pair<double, double>> out;
    const auto& s = path.samples();
    if (s.size() == 1) {
        if (point_in_polygon(s.front().pose.position.xy(), poly)) out.emplace_back(s.front().t, s.front().t);
        return out;
    }
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double t0 = s[i].t;
        const double dt = s[i + 1].t - t0;
        for (const auto& [a, b] : segment_inside_intervals(s[i].pose.position.xy(), s[i + 1].pose.position.xy(), poly)) {
            const double ta = a == 0.0 ? t0 : t0 + a * dt;
            const double tb = b == 1.0 ? s[i + 1].t : t0 + b * dt;
            if (!out.empty() && ta <= out.back().second + 1e-9) {
                out.back().second = std::max(out.back().second, tb);
            } else {
                out.emplace_back(ta, tb);
            }
        }
    }
    return out;
}

std::vector<Violation> koz_violations(const TimedPath& path, std::span<const KeepOutZone> kozs) {
    std::vector<std::pair<std::size_t, Violation>> found;
    for (std::size_t k = 0; k < kozs.size(); ++k) {
        const auto& koz = kozs[k];
        for (auto [a, b] : occupancy_intervals(path, koz.polygon)) {
            if (koz.window) {
                a = std::max(a, koz.window->net);
                b = std::min(b, koz.window->nlt);
                if (a > b) continue;
            }
            found.push_back({k, Violation{koz.id, a, b, path.pose_at(0.5 * (a + b)).position.xy()}});
        }
    }
    std::stable_sort(found.begin(), found.end(), [](const auto& x, const auto& y) {
        if (x.second.enter_t != y.second.enter_t) return x.second.enter_t < y.second.enter_t;
        return x.first < y.first;
    });
    std::vector<Violation> out;
    out.reserve(found.size());
    for (auto& f : found) out.push_back(std::move(f.second));
    return out;
}

bool aoi_active(const AreaOfInterest& aoi, double t) { return !aoi.window || aoi.window->contains(t); }

KeepOutZone street_denial_koz(const Polygon& street, const TimedPath& traj, double pad, std::string id) {
    const auto occ = occupancy_intervals(traj, street);
    if (occ.empty()) throw Error("NO_INTERSECTION", "trajectory never enters the street polygon");
    const TimeWindow w{std::max(0.0, occ.front().first - pad), occ.back().second + pad};
    return KeepOutZone{std::move(id), street, w};
}

int prior_cell_index(const AreaPriorMap& priors, const Point2& p) {
    for (std::size_t i = 0; i < priors.cells.size(); ++i) {
        if (point_in_polygon(p, priors.cells[i].polygon)) return static_cast<int>(i);
    }
    return -1;
}

double prior_lookup(const AreaPriorMap& priors, const Point2& p) {
    const int i = prior_cell_index(priors, p);
    return i < 0 ? 0.0 : priors.cells[static_cast<std::size_t>(i)].prob;
}

}  // namespace mforge
